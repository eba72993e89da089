#include "tnvault/sharing.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <ctime>
#include <fstream>
#include <numeric>

#include "tnvault/errors.hpp"
#include "tnvault/ops.hpp"
#include "tnvault/random.hpp"
#include "tnvault/tensor_io.hpp"

namespace tnvault {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string to_hex(const unsigned char* data, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = digits[data[i] >> 4];
    out[2 * i + 1] = digits[data[i] & 0xf];
  }
  return out;
}

std::array<unsigned char, 32> sha256(std::span<const std::uint8_t> bytes) {
  std::array<unsigned char, 32> digest{};
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len,
                     EVP_sha256(), nullptr) == 1 &&
              len == digest.size(),
          ErrorCode::kNumericalFailure, "SHA-256 failed");
  return digest;
}

// 128-bit identifier: the leading half of SHA-256(seed || stream || index).
std::string fragment_id(std::uint64_t seed, std::size_t index) {
  std::array<std::uint8_t, 24> buf{};
  const std::uint64_t words[3] = {seed, streams::kFragmentId,
                                  static_cast<std::uint64_t>(index)};
  for (std::size_t w = 0; w < 3; ++w)
    for (std::size_t b = 0; b < 8; ++b)
      buf[8 * w + b] = static_cast<std::uint8_t>(words[w] >> (8 * b));
  const auto digest = sha256(buf);
  return to_hex(digest.data(), 16);
}

std::vector<std::size_t> assign_servers(std::size_t n_fragments,
                                        std::size_t n_servers, bool random,
                                        std::uint64_t seed) {
  std::vector<std::size_t> servers(n_fragments);
  for (std::size_t k = 0; k < n_fragments; ++k) servers[k] = k % n_servers;
  if (random) {
    Rng rng(derive_seed(seed, streams::kAssignment, 0));
    for (std::size_t i = n_fragments; i-- > 1;) {
      std::swap(servers[i], servers[rng.next() % (i + 1)]);
    }
  }
  return servers;
}

DenseTensor permute_middle(const DenseTensor& core,
                           const std::vector<std::size_t>& perm) {
  const std::size_t r0 = core.dim(0), n = core.dim(1), r1 = core.dim(2);
  DenseTensor out(core.shape());
  for (std::size_t b = 0; b < r1; ++b)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < r0; ++a)
        out[a + r0 * (i + n * b)] = core[a + r0 * (perm[i] + n * b)];
  return out;
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        m.row(static_cast<Eigen::Index>(perm[i]));
  }
  return out;
}

DenseTensor permute_leaf(const DenseTensor& block,
                         const std::vector<std::size_t>& perm) {
  const Matrix m = permute_rows(block.as_matrix(block.dim(0), block.dim(1)), perm);
  return DenseTensor(block.shape(), std::vector<double>(m.data(), m.data() + m.size()));
}

// Applies one index map per mode to the block carrying that mode.
AnyRepresentation reindex(const AnyRepresentation& rep,
                          const std::vector<std::vector<std::size_t>>& perms) {
  AnyRepresentation out = rep;
  std::visit(
      [&](auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, TTRepresentation> ||
                      std::is_same_v<T, TRRepresentation>) {
          for (std::size_t k = 0; k < r.cores.size(); ++k)
            r.cores[k] = permute_middle(r.cores[k], perms[k]);
        } else if constexpr (std::is_same_v<T, TuckerRepresentation>) {
          for (std::size_t k = 0; k < r.factors.size(); ++k)
            r.factors[k] = permute_rows(r.factors[k], perms[k]);
        } else {
          for (std::size_t k = 0; k < r.mode_sizes.size(); ++k) {
            const auto leaf = static_cast<std::size_t>(r.tree.leaf_of_mode(k));
            r.blocks[leaf] = permute_leaf(r.blocks[leaf], perms[k]);
          }
        }
      },
      out);
  return out;
}

std::vector<std::vector<std::size_t>> permutations_for(
    const AnyRepresentation& rep, const std::vector<std::uint64_t>& seeds,
    bool inverse) {
  const Shape sizes = structure_of(rep).mode_sizes;
  require(seeds.size() == sizes.size(), ErrorCode::kSeedCountMismatch,
          "need one permutation seed per mode (" +
              std::to_string(sizes.size()) + "), got " +
              std::to_string(seeds.size()));
  std::vector<std::vector<std::size_t>> perms;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    auto p = mode_permutation(sizes[k], seeds[k]);
    perms.push_back(inverse ? inverse_permutation(p) : p);
  }
  return perms;
}

}  // namespace

std::string derived_fragment_id(std::string_view material) {
  const auto digest = sha256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(material.data()), material.size()));
  return to_hex(digest.data(), 16);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  const auto digest = sha256(bytes);
  return to_hex(digest.data(), digest.size());
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------- manifest

const FragmentEntry& ShareManifest::fragment(std::size_t core_index) const {
  for (const auto& f : fragments)
    if (f.core_index == core_index) return f;
  fail(ErrorCode::kMissingFragment,
       "manifest has no fragment for core " + std::to_string(core_index));
}

json ShareManifest::to_json() const {
  json frags = json::array();
  for (const auto& f : fragments) {
    frags.push_back({{"fragment_id", f.fragment_id},
                     {"server_id", f.server_id},
                     {"content_hash", f.content_hash},
                     {"core_index", f.core_index},
                     {"shape", f.shape}});
  }
  json j;
  j["hash_algorithm"] = hash_algorithm;
  j["scheme"] = format_name(structure.format);
  j["structure"] = structure_to_json(structure);
  j["fragments"] = frags;
  j["permutation_seeds"] = permutation_seeds;
  j["axis_order"] = axis_order;
  j["n_servers"] = n_servers;
  j["created_at"] = created_at;
  return j;
}

ShareManifest ShareManifest::from_json(const json& j) {
  try {
    ShareManifest m;
    m.hash_algorithm = j.at("hash_algorithm").get<std::string>();
    require(m.hash_algorithm == "sha256", ErrorCode::kFormatError,
            "unsupported hash algorithm " + m.hash_algorithm);
    m.structure = structure_from_json(j.at("structure"));
    for (const auto& f : j.at("fragments")) {
      m.fragments.push_back(FragmentEntry{
          f.at("fragment_id").get<std::string>(),
          f.at("server_id").get<std::size_t>(),
          f.at("content_hash").get<std::string>(),
          f.at("core_index").get<std::size_t>(), f.at("shape").get<Shape>()});
    }
    m.permutation_seeds =
        j.at("permutation_seeds").get<std::vector<std::uint64_t>>();
    m.axis_order = j.at("axis_order").get<std::vector<std::size_t>>();
    m.n_servers = j.at("n_servers").get<std::size_t>();
    m.created_at = j.at("created_at").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormatError, std::string("bad manifest: ") + e.what());
  }
}

std::string ShareManifest::canonical() const { return to_json().dump(); }

// ---------------------------------------------------------------- shares

std::vector<std::size_t> mode_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (seed == 0) return perm;
  Rng rng(seed);
  for (std::size_t i = n; i-- > 1;) {
    std::swap(perm[i], perm[rng.next() % (i + 1)]);
  }
  return perm;
}

AnyRepresentation permute_modes(const AnyRepresentation& rep,
                                const std::vector<std::uint64_t>& seeds) {
  return reindex(rep, permutations_for(rep, seeds, false));
}

AnyRepresentation unpermute_modes(const AnyRepresentation& rep,
                                  const std::vector<std::uint64_t>& seeds) {
  return reindex(rep, permutations_for(rep, seeds, true));
}

SharePackage share_representation(const AnyRepresentation& rep,
                                  std::size_t n_servers, std::uint64_t seed,
                                  bool random_assignment,
                                  std::string created_at) {
  require(n_servers >= 2, ErrorCode::kTooFewServers,
          "at least 2 servers are needed, got " + std::to_string(n_servers));
  validate(rep);
  const auto blocks = blocks_of(rep);
  require(n_servers <= blocks.size(), ErrorCode::kInvalidArgument,
          std::to_string(n_servers) + " servers but only " +
              std::to_string(blocks.size()) + " fragments");
  SharePackage pkg;
  pkg.manifest.structure = structure_of(rep);
  pkg.manifest.n_servers = n_servers;
  pkg.manifest.created_at = created_at.empty() ? utc_timestamp() : created_at;
  const auto servers =
      assign_servers(blocks.size(), n_servers, random_assignment, seed);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto bytes = encode_dt(blocks[k]);
    FragmentEntry e{fragment_id(seed, k), servers[k], sha256_hex(bytes), k,
                    blocks[k].shape()};
    pkg.shares.emplace(e.fragment_id, std::move(bytes));
    pkg.manifest.fragments.push_back(std::move(e));
  }
  return pkg;
}

SharePackage generate_shares(const DenseTensor& a, const ShareOptions& opt) {
  require(opt.n_servers >= 2, ErrorCode::kTooFewServers,
          "at least 2 servers are needed, got " + std::to_string(opt.n_servers));
  DecompositionOptions dopt;
  dopt.randomize = opt.randomize;
  dopt.delta = opt.delta;
  dopt.seed = opt.seed;
  AnyRepresentation rep;
  DecompositionReport report;
  switch (opt.format) {
    case Format::kTT: {
      auto d = tt_svd(a, opt.eps, dopt);
      rep = std::move(d.rep);
      report = std::move(d.report);
      break;
    }
    case Format::kTR: {
      auto d = tr_svd(a, opt.eps, dopt);
      rep = std::move(d.rep);
      report = std::move(d.report);
      break;
    }
    case Format::kTucker: {
      const auto ranks =
          opt.ranks.empty() ? tucker_ranks_for_tolerance(a, opt.eps) : opt.ranks;
      auto d = rtd(a, ranks, dopt);
      rep = std::move(d.rep);
      report = std::move(d.report);
      break;
    }
    case Format::kHT: {
      const auto tree = opt.tree.empty() ? DimensionTree::balanced(a.order())
                                         : DimensionTree::parse(opt.tree);
      const auto ranks = opt.ranks.empty()
                             ? ht_ranks_for_tolerance(a, tree, opt.eps)
                             : opt.ranks;
      auto d = rht(a, tree, ranks, dopt);
      rep = std::move(d.rep);
      report = std::move(d.report);
      break;
    }
  }
  std::vector<std::uint64_t> seeds;
  if (opt.permute_modes) {
    for (std::size_t k = 0; k < a.order(); ++k) {
      seeds.push_back(derive_seed(opt.seed, streams::kModePermutation, k) | 1u);
    }
    rep = permute_modes(rep, seeds);
  }
  SharePackage pkg = share_representation(rep, opt.n_servers, opt.seed,
                                          opt.random_assignment, opt.created_at);
  pkg.manifest.permutation_seeds = std::move(seeds);
  pkg.report = std::move(report);
  return pkg;
}

void verify_fragment(const FragmentEntry& entry,
                     std::span<const std::uint8_t> bytes) {
  const std::string got = sha256_hex(bytes);
  require(got == entry.content_hash, ErrorCode::kHashMismatch,
          "fragment " + entry.fragment_id + " (core " +
              std::to_string(entry.core_index) + ") hashes to " + got +
              ", manifest says " + entry.content_hash);
}

AnyRepresentation representation_from_shares(const ShareManifest& manifest,
                                             const ShareSet& shares) {
  std::vector<FragmentEntry> entries = manifest.fragments;
  std::sort(entries.begin(), entries.end(),
            [](const FragmentEntry& a, const FragmentEntry& b) {
              return a.core_index < b.core_index;
            });
  std::vector<DenseTensor> blocks;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    require(e.core_index == k, ErrorCode::kFormatError,
            "manifest core indices are not contiguous");
    const auto it = shares.find(e.fragment_id);
    require(it != shares.end(), ErrorCode::kMissingFragment,
            "fragment " + e.fragment_id + " (core " + std::to_string(k) +
                ", server " + std::to_string(e.server_id) + ") is missing");
    verify_fragment(e, it->second);
    DenseTensor block = decode_dt(it->second);
    require(block.shape() == e.shape, ErrorCode::kShapeMismatch,
            "fragment " + e.fragment_id + " has an unexpected shape");
    blocks.push_back(std::move(block));
  }
  return assemble(manifest.structure, std::move(blocks));
}

DenseTensor reconstruct_from_shares(const ShareManifest& manifest,
                                    const ShareSet& shares) {
  AnyRepresentation rep = representation_from_shares(manifest, shares);
  if (!manifest.permutation_seeds.empty()) {
    rep = unpermute_modes(rep, manifest.permutation_seeds);
  }
  DenseTensor t = reconstruct(rep);
  if (!manifest.axis_order.empty()) {
    t = permute_axes(t, inverse_permutation(manifest.axis_order));
  }
  return t;
}

// ---------------------------------------------------------------- files

void write_share_package(const fs::path& dir, const ShareManifest& manifest,
                         const ShareSet& shares) {
  fs::create_directories(dir / "fragments");
  for (const auto& [id, bytes] : shares) {
    write_file_bytes(dir / "fragments" / (id + ".dt"), bytes);
  }
  const std::string text = manifest.canonical() + "\n";
  write_file_bytes(dir / "share.manifest.json",
                   std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(text.data()),
                       text.size()));
}

ShareManifest read_manifest(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return ShareManifest::from_json(json::parse(bytes.begin(), bytes.end()));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kFormatError, "manifest " + path.string() + ": " + e.what());
  }
}

ShareSet read_fragments(const ShareManifest& manifest, const fs::path& dir) {
  ShareSet out;
  for (const auto& e : manifest.fragments) {
    const fs::path p = dir / (e.fragment_id + ".dt");
    if (fs::exists(p)) out.emplace(e.fragment_id, read_file_bytes(p));
  }
  return out;
}

// ---------------------------------------------------------------- additive

std::vector<TTRepresentation> additive_to_tn(
    const std::vector<DenseTensor>& shares, double eps, double delta,
    const std::vector<std::uint64_t>& seeds) {
  require(!shares.empty(), ErrorCode::kInvalidArgument, "no shares");
  require(seeds.size() == shares.size(), ErrorCode::kSeedCountMismatch,
          "need one seed per share");
  std::vector<TTRepresentation> out;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    require(shares[i].shape() == shares[0].shape(), ErrorCode::kShapeMismatch,
            "additive shares differ in shape");
    DecompositionOptions opt;
    opt.randomize = true;
    opt.delta = delta;
    opt.seed = seeds[i];
    out.push_back(tt_svd(shares[i], eps, opt).rep);
  }
  return out;
}

TTRepresentation sum_tn(const std::vector<TTRepresentation>& parts) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "nothing to sum");
  TTRepresentation acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = tt_add(acc, parts[i]);
  return acc;
}

std::vector<DenseTensor> tn_to_additive(const TTRepresentation& tt,
                                        std::size_t n_parties,
                                        std::uint64_t seed, double amplitude) {
  require(n_parties >= 2, ErrorCode::kInvalidArgument,
          "additive sharing needs at least 2 parties");
  require(amplitude > 0.0, ErrorCode::kInvalidArgument,
          "amplitude must be positive");
  tt.validate();
  const Shape shape = tt.mode_sizes();
  std::vector<DenseTensor> out;
  TTRepresentation last = tt;
  for (std::size_t i = 0; i + 1 < n_parties; ++i) {
    Rng rng(derive_seed(seed, streams::kAdditive, i));
    const DenseTensor r = random_uniform(shape, -amplitude, amplitude, rng);
    DecompositionOptions opt;
    opt.seed = derive_seed(seed, streams::kAdditive, 0x1000 + i);
    const TTRepresentation part = tt_svd(r, 1e-12, opt).rep;
    out.push_back(reconstruct(part));
    last = tt_add(last, tt_scale(part, -1.0));
  }
  out.push_back(reconstruct(last));
  return out;
}

}  // namespace tnvault
