#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "tnvault/decomp.hpp"
#include "tnvault/errors.hpp"
#include "tnvault/ops.hpp"
#include "tnvault/representation_io.hpp"
#include "tnvault/sharing.hpp"

using namespace tnvault;
namespace fs = std::filesystem;

namespace {

ShareOptions opts(Format f, std::uint64_t seed) {
  ShareOptions o;
  o.format = f;
  o.seed = seed;
  o.created_at = "2024-01-01T00:00:00Z";
  if (f == Format::kTucker) o.ranks = {4, 5, 3};
  return o;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Shares, RoundTripAllFormats) {
  std::mt19937_64 g(1);
  const DenseTensor t = oracle::random_tensor({4, 5, 3}, g);
  for (Format f : {Format::kTT, Format::kTR, Format::kTucker, Format::kHT}) {
    ShareOptions o = opts(f, 3);
    o.eps = 0.1;
    if (f == Format::kHT) o.ranks = ht_ranks_for_tolerance(t, DimensionTree::balanced(3), 0.05);
    const SharePackage p = generate_shares(t, o);
    EXPECT_EQ(p.manifest.fragments.size(), p.shares.size()) << format_name(f);
    EXPECT_LE(oracle::rel_diff(reconstruct_from_shares(p.manifest, p.shares), t), 0.1 + 1e-12)
        << format_name(f);
  }
}

TEST(Shares, OneCorePerServerRoundRobin) {
  std::mt19937_64 g(2);
  const DenseTensor t = oracle::random_tensor({6, 5, 4}, g);
  const SharePackage p = generate_shares(t, opts(Format::kTT, 4));
  ASSERT_EQ(p.manifest.fragments.size(), 3u);
  std::set<std::size_t> servers;
  std::set<std::string> ids;
  for (const auto& f : p.manifest.fragments) {
    EXPECT_EQ(f.server_id, f.core_index);
    EXPECT_EQ(f.fragment_id.size(), 32u);
    EXPECT_EQ(f.content_hash.size(), 64u);
    servers.insert(f.server_id);
    ids.insert(f.fragment_id);
  }
  EXPECT_EQ(servers.size(), 3u);
  EXPECT_EQ(ids.size(), 3u);
}

TEST(Shares, SeedsChangeBytesNotTensor) {
  std::mt19937_64 g(3);
  const DenseTensor t = oracle::random_tensor({5, 5, 5}, g);
  const SharePackage a = generate_shares(t, opts(Format::kTT, 10));
  const SharePackage b = generate_shares(t, opts(Format::kTT, 11));
  const SharePackage a2 = generate_shares(t, opts(Format::kTT, 10));
  EXPECT_EQ(a.shares, a2.shares);
  EXPECT_EQ(a.manifest, a2.manifest);
  EXPECT_NE(a.manifest.fragment(1).content_hash, b.manifest.fragment(1).content_hash);
  const DenseTensor ra = reconstruct_from_shares(a.manifest, a.shares);
  const DenseTensor rb = reconstruct_from_shares(b.manifest, b.shares);
  EXPECT_LE(oracle::frob(oracle::add(ra, oracle::hadamard(rb, DenseTensor(rb.shape(), std::vector<double>(rb.size(), -1.0))))),
            0.2 * oracle::frob(t));
}

TEST(Shares, TooFewServers) {
  std::mt19937_64 g(4);
  const DenseTensor t = oracle::random_tensor({3, 3, 3}, g);
  ShareOptions o = opts(Format::kTT, 1);
  o.n_servers = 1;
  EXPECT_EQ(code_of([&] { generate_shares(t, o); }), ErrorCode::kTooFewServers);
}

TEST(Shares, MissingFragmentNamesIt) {
  std::mt19937_64 g(5);
  const DenseTensor t = oracle::random_tensor({4, 4, 4}, g);
  const SharePackage p = generate_shares(t, opts(Format::kTT, 6));
  ShareSet partial = p.shares;
  const std::string gone = p.manifest.fragment(2).fragment_id;
  partial.erase(gone);
  try {
    reconstruct_from_shares(p.manifest, partial);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFragment);
    EXPECT_NE(std::string(e.what()).find(gone), std::string::npos);
  }
}

TEST(Shares, EverySingleByteCorruptionIsDetected) {
  std::mt19937_64 g(6);
  const DenseTensor t = oracle::random_tensor({3, 3, 3}, g);
  const SharePackage p = generate_shares(t, opts(Format::kTT, 7));
  const std::string id = p.manifest.fragment(1).fragment_id;
  const std::size_t n = p.shares.at(id).size();
  for (std::size_t i = 0; i < n; ++i) {
    ShareSet bad = p.shares;
    bad[id][i] ^= 0x01;
    EXPECT_EQ(code_of([&] { reconstruct_from_shares(p.manifest, bad); }), ErrorCode::kHashMismatch);
  }
}

TEST(Shares, PackageOnDiskRoundTrip) {
  std::mt19937_64 g(7);
  const DenseTensor t = oracle::random_tensor({4, 5, 3}, g);
  ShareOptions o = opts(Format::kTucker, 8);
  o.permute_modes = true;
  const SharePackage p = generate_shares(t, o);
  const fs::path dir = fs::temp_directory_path() / "tnvault_test_pkg";
  fs::remove_all(dir);
  write_share_package(dir, p.manifest, p.shares);
  const ShareManifest m = read_manifest(dir / "share.manifest.json");
  EXPECT_EQ(m, p.manifest);
  EXPECT_EQ(ShareManifest::from_json(nlohmann::json::parse(m.canonical())), m);
  EXPECT_EQ(read_fragments(m, dir / "fragments"), p.shares);
  EXPECT_EQ(m.permutation_seeds.size(), 3u);
  EXPECT_LE(oracle::rel_diff(reconstruct_from_shares(m, read_fragments(m, dir / "fragments")), t), 1e-10);
}

TEST(Shares, CanonicalManifestHasSortedKeys) {
  std::mt19937_64 g(8);
  const SharePackage p = generate_shares(oracle::random_tensor({3, 3, 3}, g), opts(Format::kTT, 9));
  const std::string c = p.manifest.canonical();
  EXPECT_EQ(c.find(' '), std::string::npos);
  EXPECT_LT(c.find("\"axis_order\""), c.find("\"created_at\""));
  EXPECT_LT(c.find("\"created_at\""), c.find("\"fragments\""));
}

TEST(ModePermutation, InverseIsBitwiseAndMatchesIndexOracle) {
  std::mt19937_64 g(9);
  const Shape modes{4, 5, 3};
  const auto tt = oracle::random_tt(modes, {1, 2, 3, 1}, g);
  const std::vector<std::uint64_t> seeds{5, 9, 13};
  const AnyRepresentation p = permute_modes(tt, seeds);
  const AnyRepresentation back = unpermute_modes(p, seeds);
  const auto& bt = std::get<TTRepresentation>(back);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(bt.cores[k], tt.cores[k]);

  const DenseTensor orig = oracle::chain_dense(tt.cores, false);
  const DenseTensor perm = reconstruct(p);
  std::vector<std::vector<std::size_t>> maps;
  for (std::size_t k = 0; k < 3; ++k) maps.push_back(mode_permutation(modes[k], seeds[k]));
  oracle::for_each_index(modes, [&](const oracle::Index& i) {
    EXPECT_NEAR(oracle::get(perm, i), oracle::get(orig, {maps[0][i[0]], maps[1][i[1]], maps[2][i[2]]}),
                1e-12);
  });
}

TEST(ModePermutation, IdentitySeedsAndCountMismatch) {
  std::mt19937_64 g(10);
  const auto tucker = oracle::random_tucker({3, 4, 2}, {2, 2, 2}, g);
  const AnyRepresentation p = permute_modes(tucker, {0, 0, 0});
  EXPECT_EQ(std::get<TuckerRepresentation>(p).factors, tucker.factors);
  EXPECT_EQ(code_of([&] { permute_modes(tucker, {1, 2}); }), ErrorCode::kSeedCountMismatch);
  const auto perm = mode_permutation(6, 3);
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(ModePermutation, HtAndTrReconstructPermuted) {
  std::mt19937_64 g(11);
  const DenseTensor t = oracle::random_tensor({3, 4, 3}, g);
  const std::vector<std::uint64_t> seeds{3, 5, 7};
  DecompositionOptions o;
  o.seed = 2;
  const auto tr = tr_svd(t, 1e-12, o).rep;
  const auto tree = DimensionTree::balanced(3);
  const auto ht = rht(t, tree, ht_ranks_for_tolerance(t, tree, 1e-12), o).rep;
  for (const AnyRepresentation& rep : {AnyRepresentation(tr), AnyRepresentation(ht)}) {
    const DenseTensor back = reconstruct(unpermute_modes(permute_modes(rep, seeds), seeds));
    EXPECT_LE(oracle::rel_diff(back, t), 1e-10);
  }
}

TEST(Additive, TwoSharesToTnAndBack) {
  std::mt19937_64 g(12);
  const DenseTensor t = oracle::random_tensor({5, 4, 6}, g);
  // r with ||r|| <= 0.5 ||t|| keeps the 2 eps bound (error scales with share norms).
  DenseTensor r = oracle::random_tensor(t.shape(), g);
  r = oracle::hadamard(r, DenseTensor(t.shape(), std::vector<double>(t.size(), 0.4 * oracle::frob(t) / oracle::frob(r))));
  const DenseTensor s0 = oracle::add(t, oracle::hadamard(r, DenseTensor(t.shape(), std::vector<double>(t.size(), -1.0))));
  const double eps = 0.1;
  const auto parts = additive_to_tn({s0, r}, eps, 0.05, {1, 2});
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_LE(oracle::rel_diff(reconstruct(sum_tn(parts)), t), 2 * eps);

  const auto single = additive_to_tn({t}, eps, 0.05, {4});
  DecompositionOptions o;
  o.delta = 0.05;
  o.seed = 4;
  const auto direct = tt_svd(t, eps, o).rep;
  ASSERT_EQ(single[0].cores.size(), direct.cores.size());
  for (std::size_t k = 0; k < direct.cores.size(); ++k) EXPECT_EQ(single[0].cores[k], direct.cores[k]);
}

TEST(Additive, ZeroSumShares) {
  std::mt19937_64 g(13);
  const DenseTensor a = oracle::random_tensor({4, 4, 4}, g);
  const DenseTensor b = oracle::hadamard(a, DenseTensor(a.shape(), std::vector<double>(a.size(), -1.0)));
  const double eps = 0.1;
  const auto parts = additive_to_tn({a, b}, eps, 0.05, {7, 8});
  EXPECT_LE(oracle::frob(reconstruct(sum_tn(parts))), 2 * eps * (oracle::frob(a) + oracle::frob(b)));
}

TEST(Additive, TnToAdditiveSumsAndIsDeterministic) {
  std::mt19937_64 g(14);
  const auto tt = oracle::random_tt({4, 5, 3}, {1, 2, 2, 1}, g);
  const DenseTensor d = oracle::chain_dense(tt.cores, false);
  for (std::size_t n : {2u, 4u}) {
    const auto shares = tn_to_additive(tt, n, 3);
    ASSERT_EQ(shares.size(), n);
    DenseTensor sum(d.shape());
    for (const auto& s : shares) sum = oracle::add(sum, s);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(sum[i], d[i], 1e-12);
  }
  EXPECT_EQ(tn_to_additive(tt, 2, 3), tn_to_additive(tt, 2, 3));
}

TEST(Additive, LeadingSharesUniformAndIndependentOfSecret) {
  std::mt19937_64 g(15);
  const Shape s{10, 10, 100};  // 1e4 draws
  const auto a = oracle::random_tt(s, {1, 2, 2, 1}, g);
  const auto b = oracle::random_tt(s, {1, 3, 1, 1}, g);
  const auto sa = tn_to_additive(a, 3, 99, 1.0);
  const auto sb = tn_to_additive(b, 3, 99, 1.0);
  const DenseTensor secret = oracle::chain_dense(a.cores, false);
  for (std::size_t p = 0; p < 2; ++p) {
    // Same seed, different secret: identical leading shares up to the TT round trip.
    EXPECT_LE(oracle::rel_diff(sa[p], sb[p]), 1e-10);
    // Chi-square over 10 equal bins of [-1, 1]; 99.9% quantile with 9 dof is 27.88.
    std::vector<double> counts(10, 0.0);
    for (double v : sa[p].data()) {
      ASSERT_GE(v, -1.0 - 1e-9);
      ASSERT_LE(v, 1.0 + 1e-9);
      counts[std::min<std::size_t>(9, static_cast<std::size_t>((v + 1.0) * 5.0))] += 1;
    }
    double chi2 = 0;
    for (double c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    EXPECT_LT(chi2, 27.88);
    const auto corr = oracle::inner(sa[p], secret) / (oracle::frob(sa[p]) * oracle::frob(secret));
    EXPECT_LT(std::abs(corr), 0.05);
  }
}
