// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "tnvault/bench.hpp"
#include "tnvault/cluster.hpp"
#include "tnvault/decomp.hpp"
#include "tnvault/errors.hpp"
#include "tnvault/metrics.hpp"
#include "tnvault/ops.hpp"
#include "tnvault/representation_io.hpp"
#include "tnvault/sharing.hpp"
#include "tnvault/tensor_io.hpp"

using namespace tnvault;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kDelta = 0.05;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Every Δ drawn anywhere in this run, for criterion 8.
std::vector<double> g_deltas;
std::size_t g_records = 0;

void note(const DecompositionReport& r) {
  for (const auto& p : r.perturbations) {
    ++g_records;
    g_deltas.insert(g_deltas.end(), p.factors.begin(), p.factors.end());
  }
}

DecompositionOptions base_opt() {
  DecompositionOptions o;
  o.randomize = false;
  return o;
}

DecompositionOptions rnd_opt(std::uint64_t seed) {
  DecompositionOptions o;
  o.delta = kDelta;
  o.seed = seed;
  return o;
}

double rel(const DenseTensor& a, const DenseTensor& ref) {
  double d = 0, n = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    d += (a[i] - ref[i]) * (a[i] - ref[i]);
    n += ref[i] * ref[i];
  }
  return std::sqrt(d / n);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// Random tensors shared by criteria 1 and 2: orders 3-4, modes <= 16.
std::vector<DenseTensor> criterion1_inputs() {
  std::mt19937_64 g(20240101);
  std::uniform_int_distribution<int> order(3, 4), mode(2, 16);
  std::vector<DenseTensor> out;
  for (int i = 0; i < 50; ++i) {
    Shape s(static_cast<std::size_t>(order(g)));
    for (auto& m : s) m = static_cast<std::size_t>(mode(g));
    out.push_back(oracle::random_tensor(s, g));
  }
  return out;
}

// Mean |rho| over the trailing axis of two equally shaped blocks; 1 when no
// slice is defined.
double mean_abs_pearson(const DenseTensor& a, const DenseTensor& b) {
  const auto v = pearson_per_rank(a, b, a.order() - 1);
  double s = 0;
  std::size_t n = 0;
  for (const auto& x : v)
    if (x) {
      s += *x;
      ++n;
    }
  return n ? s / static_cast<double>(n) : 1.0;
}

std::vector<DenseTensor> blocks(const AnyRepresentation& rep) { return blocks_of(rep); }

// Smallest mean |Pearson| across block pairs of identical shape.
double min_block_pearson(const AnyRepresentation& x, const AnyRepresentation& y) {
  const auto bx = blocks(x), by = blocks(y);
  double best = 1.0;
  for (std::size_t i = 0; i < std::min(bx.size(), by.size()); ++i) {
    if (bx[i].shape() != by[i].shape() || bx[i].size() < 2) continue;
    best = std::min(best, mean_abs_pearson(bx[i], by[i]));
  }
  return best;
}

std::vector<std::size_t> full_ht_ranks(const DenseTensor& t, const DimensionTree& tree) {
  std::vector<std::size_t> r(tree.size(), 1);
  for (std::size_t i = 1; i < tree.size(); ++i) {
    std::size_t d = 1;
    for (std::size_t m : tree.node(i).modes) d *= t.dim(m);
    r[i] = d;
  }
  return r;
}

// ---------------------------------------------------------------- 1 + 2

struct Fidelity {
  Outcome c1, c2;
};

Fidelity criteria_1_and_2() {
  const auto start = Clock::now();
  const auto inputs = criterion1_inputs();
  double worst_tt = 0, worst_tr = 0, worst_tk = 0, worst_ht = 0, worst_gap = 0;
  std::size_t c1_fail = 0, c2_fail = 0, exact_fail = 0, same_cores = 0;
  std::uint64_t seed = 1;

  for (const DenseTensor& t : inputs) {
    const DimensionTree tree = DimensionTree::balanced(t.order());
    for (double eps : {0.3, 0.1, 0.01}) {
      auto check = [&](double base_err, double rnd_err, double limit, double& worst) {
        worst = std::max({worst, base_err / eps, rnd_err / eps});
        if (base_err > limit || rnd_err > limit) ++c1_fail;
        const double gap = std::abs(rnd_err - base_err);
        worst_gap = std::max(worst_gap, gap / eps);
        if (gap > eps) ++c2_fail;
      };
      {
        const auto b = tt_svd(t, eps, base_opt());
        const auto r = tt_svd(t, eps, rnd_opt(++seed));
        note(r.report);
        check(rel(reconstruct(b.rep), t), rel(reconstruct(r.rep), t), eps, worst_tt);
      }
      {
        const auto b = tr_svd(t, eps, base_opt());
        const auto r = tr_svd(t, eps, rnd_opt(++seed));
        note(r.report);
        check(rel(reconstruct(b.rep), t), rel(reconstruct(r.rep), t), 1.5 * eps, worst_tr);
      }
      {
        const auto ranks = tucker_ranks_for_tolerance(t, eps);
        const auto b = rtd(t, ranks, base_opt());
        const auto r = rtd(t, ranks, rnd_opt(++seed));
        note(r.report);
        check(rel(reconstruct(b.rep), t), rel(reconstruct(r.rep), t), 1.5 * eps, worst_tk);
      }
      {
        const auto ranks = ht_ranks_for_tolerance(t, tree, eps);
        const auto b = rht(t, tree, ranks, base_opt());
        const auto r = rht(t, tree, ranks, rnd_opt(++seed));
        note(r.report);
        check(rel(reconstruct(b.rep), t), rel(reconstruct(r.rep), t), 1.5 * eps, worst_ht);
      }
    }

    // No truncation: same tensor, different cores.
    std::vector<std::pair<AnyRepresentation, AnyRepresentation>> pairs;
    {
      const auto b = tt_svd(t, 1e-12, base_opt());
      const auto r = tt_svd(t, 1e-12, rnd_opt(++seed));
      note(r.report);
      pairs.emplace_back(b.rep, r.rep);
    }
    {
      const auto b = tr_svd(t, 1e-12, base_opt());
      const auto r = tr_svd(t, 1e-12, rnd_opt(++seed));
      note(r.report);
      pairs.emplace_back(b.rep, r.rep);
    }
    {
      const auto b = rtd(t, t.shape(), base_opt());
      const auto r = rtd(t, t.shape(), rnd_opt(++seed));
      note(r.report);
      pairs.emplace_back(b.rep, r.rep);
    }
    {
      const auto ranks = full_ht_ranks(t, tree);
      const auto b = rht(t, tree, ranks, base_opt());
      const auto r = rht(t, tree, ranks, rnd_opt(++seed));
      note(r.report);
      pairs.emplace_back(b.rep, r.rep);
    }
    for (const auto& [b, r] : pairs) {
      if (rel(reconstruct(r), reconstruct(b)) > 1e-10) ++exact_fail;
      if (min_block_pearson(b, r) >= 0.999) ++same_cores;
    }
  }
  const double secs = seconds_since(start);

  Fidelity f;
  f.c1.pass = c1_fail == 0 && secs < 30.0;
  f.c1.detail = "worst err/eps TT " + fmt("%.3f", worst_tt) + ", TR " + fmt("%.3f", worst_tr) +
                ", rTD " + fmt("%.3f", worst_tk) + ", rHT " + fmt("%.3f", worst_ht) + "; " +
                std::to_string(c1_fail) + " violations over 50 tensors x 3 eps; " +
                fmt("%.1f s", secs) + " (criteria 1+2 together)";
  f.c2.pass = c2_fail == 0 && exact_fail == 0 && same_cores == 0;
  f.c2.detail = "max |err_r - err_b|/eps " + fmt("%.3f", worst_gap) + " (" + std::to_string(c2_fail) +
                " over eps); no-truncation mismatches " + std::to_string(exact_fail) +
                "; pairs without a core of mean |rho| < 0.999: " + std::to_string(same_cores) + "/200";
  return f;
}

// ---------------------------------------------------------------- 3

Outcome criterion_3() {
  const auto start = Clock::now();
  const DenseTensor s = superdiagonal(3, 10);
  const auto b = tt_svd(s, 1e-12, base_opt());
  const auto r = tt_svd(s, 1e-12, rnd_opt(3));
  note(r.report);
  const double eb = rel(reconstruct(b.rep), s), er = rel(reconstruct(r.rep), s);
  const DenseTensor padded = pad_noise(s, {2, 2, 2}, 1.0, 3);
  const auto pb = tt_svd(padded, 1e-10, base_opt()).rep.ranks();
  const auto pr_dec = tt_svd(padded, 1e-10, rnd_opt(4));
  note(pr_dec.report);
  const auto pr = pr_dec.rep.ranks();
  bool not_lower = true;
  for (std::size_t k = 0; k < pb.size(); ++k)
    not_lower = not_lower && pb[k] >= b.rep.ranks()[k] && pr[k] >= r.rep.ranks()[k];
  const double secs = seconds_since(start);
  Outcome o;
  o.pass = eb <= 1e-10 && er <= 1e-10 && not_lower && secs < 5.0;
  std::ostringstream d;
  d << "errors TT-SVD " << fmt("%.1e", eb) << ", rTT-SVD " << fmt("%.1e", er) << "; ranks (" << b.rep.ranks()[1]
    << "," << b.rep.ranks()[2] << ") -> padded (" << pb[1] << "," << pb[2] << "); " << fmt("%.2f s", secs);
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- 4

Outcome criterion_4() {
  // 600 x 600 x 3 image in the balanced 600 x 3 x 600 layout.
  const DenseTensor img = permute_axes(synthetic_image(600, 600, 3, 1.0, 4), std::vector<std::size_t>{0, 2, 1});
  const auto tk = rtd(img, {350, 3, 350}, rnd_opt(5));
  note(tk.report);
  DecompositionOptions o = rnd_opt(6);
  o.max_ranks = {350, 350};
  const auto tt = tt_svd(img, 1e-9, o);
  note(tt.report);
  const double cr_tk = compression_ratio(tk.rep);
  const double cr_tt = compression_ratio(tt.rep);
  const double formula_tk =
      static_cast<double>(oracle::tucker_params({600, 3, 600}, tk.rep.ranks())) / 1080000.0;
  const double formula_tt = static_cast<double>(oracle::tt_params({600, 3, 600}, tt.rep.ranks())) / 1080000.0;
  Outcome out;
  out.pass = std::abs(cr_tk - 0.7292) <= 1e-4 && std::abs(cr_tt - 0.7292) <= 1e-4 &&
             std::abs(cr_tk - formula_tk) <= 1e-15 && std::abs(cr_tt - formula_tt) <= 1e-15 &&
             std::abs(cr_tk - 0.725) <= 0.01 && std::abs(cr_tt - 0.725) <= 0.01;
  std::ostringstream d;
  d << "Tucker (350,3,350) CR " << fmt("%.5f", cr_tk) << ", TT (" << tt.rep.ranks()[1] << "," << tt.rep.ranks()[2]
    << ") CR " << fmt("%.5f", cr_tt);
  out.detail = d.str();
  return out;
}

// ---------------------------------------------------------------- 5

Outcome criterion_5() {
  std::mt19937_64 g(5005);
  std::uniform_int_distribution<int> mode(1, 4), rank(1, 3);
  double worst = 0;
  std::size_t law_fail = 0;
  for (int i = 0; i < 100; ++i) {
    Shape modes(3), ra(3), rb(3);
    for (std::size_t k = 0; k < 3; ++k) {
      modes[k] = static_cast<std::size_t>(mode(g));
      ra[k] = std::min<std::size_t>(modes[k], static_cast<std::size_t>(rank(g)));
      rb[k] = std::min<std::size_t>(modes[k], static_cast<std::size_t>(rank(g)));
    }
    const auto a = oracle::random_tucker(modes, ra, g);
    const auto b = oracle::random_tucker(modes, rb, g);
    const DenseTensor da = oracle::tucker_dense(a.core, a.factors);
    const DenseTensor db = oracle::tucker_dense(b.core, b.factors);
    const std::pair<TuckerOp, DenseTensor> cases[] = {
        {TuckerOp::kAdd, oracle::add(da, db)},
        {TuckerOp::kDirectSum, oracle::direct_sum(da, db)},
        {TuckerOp::kHadamard, oracle::hadamard(da, db)},
        {TuckerOp::kKronecker, oracle::kronecker(da, db)}};
    for (const auto& [op, want] : cases) {
      const auto r = tucker_binary(op, a, b);
      worst = std::max(worst, rel(reconstruct(r), want));
      const bool sum = op == TuckerOp::kAdd || op == TuckerOp::kDirectSum;
      for (std::size_t k = 0; k < 3; ++k)
        if (r.ranks()[k] != (sum ? ra[k] + rb[k] : ra[k] * rb[k])) ++law_fail;
    }
  }
  Outcome o;
  o.pass = worst <= 1e-10 && law_fail == 0;
  o.detail = "worst relative error " + fmt("%.1e", worst) + " over 400 ops; rank-law violations " +
             std::to_string(law_fail);
  return o;
}

// ---------------------------------------------------------------- 6

Outcome criterion_6() {
  std::mt19937_64 g(6006);
  std::uniform_int_distribution<int> order(2, 4), mode(2, 4), rank(1, 3);
  double add = 0, had = 0, mv = 0, inn = 0;
  auto random_shape = [&](std::size_t n) {
    Shape s(n);
    for (auto& m : s) m = static_cast<std::size_t>(mode(g));
    return s;
  };
  auto random_ranks = [&](std::size_t n) {
    std::vector<std::size_t> r(n + 1, 1);
    for (std::size_t k = 1; k < n; ++k) r[k] = static_cast<std::size_t>(rank(g));
    return r;
  };
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = static_cast<std::size_t>(order(g));
    const Shape s = random_shape(n);
    const auto a = oracle::random_tt(s, random_ranks(n), g);
    const auto b = oracle::random_tt(s, random_ranks(n), g);
    const DenseTensor da = oracle::chain_dense(a.cores, false), db = oracle::chain_dense(b.cores, false);
    add = std::max(add, rel(oracle::chain_dense(tt_add(a, b).cores, false), oracle::add(da, db)));
    had = std::max(had, rel(oracle::chain_dense(tt_hadamard(a, b).cores, false), oracle::hadamard(da, db)));
    const double dot = oracle::inner(da, db);
    inn = std::max(inn, std::abs(tt_inner(a, b) - dot) / std::max(1.0, std::abs(dot)));

    TTMatrixRepresentation m;
    const auto mr = random_ranks(n);
    const Shape rows = random_shape(n);
    for (std::size_t k = 0; k < n; ++k) m.cores.push_back(oracle::random_tensor({mr[k], rows[k], s[k], mr[k + 1]}, g));
    mv = std::max(mv, rel(oracle::chain_dense(tt_matvec(m, a).cores, false), oracle::tt_matvec_dense(m, da)));
  }
  std::mt19937_64 h(66);
  const auto x = oracle::random_tt({3, 4, 2, 3}, {1, 2, 3, 2, 1}, h);
  const double ident = rel(oracle::chain_dense(tt_matvec(TTMatrixRepresentation::identity({3, 4, 2, 3}), x).cores, false),
                           oracle::chain_dense(x.cores, false));
  Outcome o;
  o.pass = add <= 1e-10 && had <= 1e-10 && mv <= 1e-10 && inn <= 1e-10 && ident <= 1e-12;
  o.detail = "worst add " + fmt("%.1e", add) + ", hadamard " + fmt("%.1e", had) + ", matvec " + fmt("%.1e", mv) +
             ", inner " + fmt("%.1e", inn) + " (100 cases each); identity matvec " + fmt("%.1e", ident);
  return o;
}

// ---------------------------------------------------------------- 7

Outcome criterion_7() {
  std::mt19937_64 g(7007);
  const auto a = oracle::random_tt({6, 5, 7, 4}, {1, 4, 5, 3, 1}, g);
  const auto doubled = tt_add(a, a);
  const auto b = tt_round(doubled, 1e-10, base_opt());
  const auto r = tt_round(doubled, 1e-10, rnd_opt(7));
  note(r.report);
  bool ranks_ok = true;
  for (std::size_t k = 0; k < a.ranks().size(); ++k)
    ranks_ok = ranks_ok && b.rep.ranks()[k] <= a.ranks()[k] && r.rep.ranks()[k] <= a.ranks()[k];
  const DenseTensor two_a = reconstruct(tt_scale(a, 2.0));
  const double eb = rel(reconstruct(b.rep), two_a), er = rel(reconstruct(r.rep), two_a);
  const double agree = rel(reconstruct(r.rep), reconstruct(b.rep));
  Outcome o;
  o.pass = ranks_ok && eb <= 1e-8 && er <= 1e-8 && agree <= 1e-10;
  std::ostringstream d;
  d << "ranks (" << doubled.ranks()[1] << "," << doubled.ranks()[2] << "," << doubled.ranks()[3] << ") -> ("
    << r.rep.ranks()[1] << "," << r.rep.ranks()[2] << "," << r.rep.ranks()[3] << "); error vs 2A " << fmt("%.1e", er)
    << "; randomized vs baseline " << fmt("%.1e", agree);
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- 9

bool bitwise(const TTRepresentation& a, const TTRepresentation& b) {
  if (a.cores.size() != b.cores.size()) return false;
  for (std::size_t k = 0; k < a.cores.size(); ++k)
    if (encode_dt(a.cores[k]) != encode_dt(b.cores[k])) return false;
  return true;
}

Outcome criterion_9() {
  std::size_t mismatches = 0, core_transfers = 0, runs = 0;
  for (TransportKind tk : {TransportKind::kInMemory, TransportKind::kLocalSockets}) {
    std::mt19937_64 g(9009);
    std::uniform_int_distribution<int> order(3, 4), mode(2, 6), rank(1, 4);
    std::map<std::size_t, std::unique_ptr<Cluster>> clusters;
    for (int i = 0; i < 20; ++i) {
      const std::size_t n = static_cast<std::size_t>(order(g));
      Shape s(n);
      for (auto& m : s) m = static_cast<std::size_t>(mode(g));
      auto ranks = [&] {
        std::vector<std::size_t> r(n + 1, 1);
        for (std::size_t k = 1; k < n; ++k) r[k] = static_cast<std::size_t>(rank(g));
        return r;
      };
      const auto a = oracle::random_tt(s, ranks(), g);
      const auto b = oracle::random_tt(s, ranks(), g);
      auto& cl = clusters[n];
      if (!cl) cl = spawn_cluster(n, tk);
      const auto pa = share_representation(a, n, 100 + i, false, "acceptance");
      const auto pb = share_representation(b, n, 200 + i, false, "acceptance");
      distribute(*cl, pa.shares, pa.manifest);
      distribute(*cl, pb.shares, pb.manifest);

      cl->clear_log();
      const ShareManifest sum = dispersed_local_op(*cl, LocalOpKind::kTTAdd, pa.manifest, pb.manifest);
      const ShareManifest had = dispersed_local_op(*cl, LocalOpKind::kTTHadamard, pa.manifest, pb.manifest);
      for (const LogEntry& e : cl->log())
        if (e.type == MessageType::kTensorBlob) ++core_transfers;

      const auto tt_of = [&](const ShareManifest& m) {
        return std::get<TTRepresentation>(representation_from_shares(m, cl->collect(m)));
      };
      const auto local_sum = tt_add(a, b);
      if (!bitwise(tt_of(sum), local_sum)) ++mismatches;
      if (!bitwise(tt_of(had), tt_hadamard(a, b))) ++mismatches;
      const ShareManifest rounded = dispersed_tt_round(*cl, sum, 0.1, true, kDelta, 300 + i);
      const auto local_round = tt_round(local_sum, 0.1, rnd_opt(300 + i));
      note(local_round.report);
      if (!bitwise(tt_of(rounded), local_round.rep)) ++mismatches;
      runs += 3;
    }
    for (auto& [n, cl] : clusters) cl->shutdown();
  }
  Outcome o;
  o.pass = mismatches == 0 && core_transfers == 0;
  o.detail = std::to_string(runs - mismatches) + "/" + std::to_string(runs) +
             " dispersed results bitwise equal (20 TTs x add/hadamard/round x 2 transports); tensor blobs during local ops: " +
             std::to_string(core_transfers);
  return o;
}

// ---------------------------------------------------------------- 10

Outcome criterion_10() {
  std::mt19937_64 g(1010);
  std::uniform_int_distribution<int> mode(3, 8);
  const double eps = 0.1;
  std::size_t round_fail = 0, corrupt_missed = 0, corrupt_checked = 0;
  double worst = 0, worst_add = 0, worst_sum = 0;
  std::uint64_t seed = 1;
  for (Format f : {Format::kTT, Format::kTR, Format::kTucker, Format::kHT}) {
    for (int i = 0; i < 20; ++i) {
      const DenseTensor t =
          oracle::random_tensor({static_cast<std::size_t>(mode(g)), static_cast<std::size_t>(mode(g)),
                                 static_cast<std::size_t>(mode(g))},
                                g);
      ShareOptions o;
      o.format = f;
      o.eps = eps;
      o.delta = kDelta;
      o.seed = ++seed;
      o.permute_modes = i % 2 == 1;
      o.created_at = "acceptance";
      const SharePackage p = generate_shares(t, o);
      note(p.report);
      const double err = rel(reconstruct_from_shares(p.manifest, p.shares), t);
      worst = std::max(worst, err / eps);
      if (err > eps) ++round_fail;

      // Flip one random byte of one random fragment.
      const auto& frag = p.manifest.fragments[g() % p.manifest.fragments.size()];
      ShareSet bad = p.shares;
      auto& bytes = bad[frag.fragment_id];
      bytes[g() % bytes.size()] ^= static_cast<std::uint8_t>(1 + g() % 255);
      ++corrupt_checked;
      try {
        reconstruct_from_shares(p.manifest, bad);
        ++corrupt_missed;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kHashMismatch) ++corrupt_missed;
      }
    }
  }
  for (int i = 0; i < 20; ++i) {
    const DenseTensor t = oracle::random_tensor({5, 6, 4}, g);
    DenseTensor r = oracle::random_tensor(t.shape(), g);
    const double scale = 0.5 * oracle::frob(t) / oracle::frob(r) * std::uniform_real_distribution<double>(0.1, 1.0)(g);
    for (double& v : r.data()) v *= scale;
    DenseTensor s0 = t;
    for (std::size_t k = 0; k < t.size(); ++k) s0[k] -= r[k];
    const auto parts = additive_to_tn({s0, r}, eps, kDelta, {++seed, ++seed});
    worst_add = std::max(worst_add, rel(reconstruct(sum_tn(parts)), t) / (2 * eps));

    const auto tt = tt_svd(t, 0.2, rnd_opt(++seed));
    note(tt.report);
    const auto shares = tn_to_additive(tt.rep, 3, ++seed);
    const DenseTensor secret = reconstruct(tt.rep);
    for (std::size_t k = 0; k < secret.size(); ++k) {
      double sum = 0;
      for (const auto& s : shares) sum += s[k];
      worst_sum = std::max(worst_sum, std::abs(sum - secret[k]));
    }
  }
  Outcome out;
  out.pass = round_fail == 0 && corrupt_missed == 0 && worst_add <= 1.0 && worst_sum <= 1e-12;
  out.detail = "round trip worst err/eps " + fmt("%.3f", worst) + " (" + std::to_string(round_fail) +
               " of 80 over eps); corruptions detected " + std::to_string(corrupt_checked - corrupt_missed) + "/" +
               std::to_string(corrupt_checked) + "; additive TT path worst err/(2 eps) " + fmt("%.3f", worst_add) +
               "; tn_to_additive max |sum - secret| " + fmt("%.1e", worst_sum);
  return out;
}

// ---------------------------------------------------------------- 11

Outcome criterion_11() {
  std::mt19937_64 g(1111);
  std::uniform_int_distribution<int> mode(2, 6), bins(2, 32);
  double l2 = 0, nm = 0, pe = 0, cr = 0, self = 0;
  std::size_t hist_fail = 0, undefined_mismatch = 0;
  for (int i = 0; i < 50; ++i) {
    const Shape s{static_cast<std::size_t>(mode(g)), static_cast<std::size_t>(mode(g)),
                  static_cast<std::size_t>(mode(g))};
    std::vector<DenseTensor> xs, ys;
    for (int k = 0; k < 3; ++k) {
      xs.push_back(oracle::random_tensor(s, g));
      ys.push_back(oracle::random_tensor(s, g));
    }
    l2 = std::max(l2, std::abs(l2_dissimilarity(xs, ys) - oracle::l2_dissimilarity(xs, ys)));
    const std::size_t b = static_cast<std::size_t>(bins(g));
    nm = std::max(nm, std::abs(nmi(xs[0], ys[0], b) - oracle::nmi(xs[0], ys[0], b)));
    self = std::max(self, std::abs(nmi(xs[1], xs[1], kDefaultNmiBins) - 1.0));
    const std::size_t axis = g() % 3;
    const auto got = pearson_per_rank(xs[0], ys[0], axis);
    const auto want = oracle::pearson(xs[0], ys[0], axis);
    for (std::size_t r = 0; r < got.size(); ++r) {
      if (got[r].has_value() != want[r].has_value()) {
        ++undefined_mismatch;
      } else if (got[r]) {
        pe = std::max(pe, std::abs(*got[r] - *want[r]));
      }
    }
    if (histogram(xs[2], b) != oracle::histogram(xs[2], b)) ++hist_fail;

    std::vector<std::size_t> ranks{1, 1 + g() % 3, 1 + g() % 3, 1};
    const auto tt = oracle::random_tt(s, ranks, g);
    const double modes_prod = static_cast<double>(oracle::product(s));
    cr = std::max(cr, std::abs(compression_ratio(tt) - static_cast<double>(oracle::tt_params(s, ranks)) / modes_prod));
    const std::vector<std::size_t> tr{std::min<std::size_t>(s[0], 1 + g() % 3),
                                      std::min<std::size_t>(s[1], 1 + g() % 3),
                                      std::min<std::size_t>(s[2], 1 + g() % 3)};
    const auto tk = oracle::random_tucker(s, tr, g);
    cr = std::max(cr, std::abs(compression_ratio(tk) - static_cast<double>(oracle::tucker_params(s, tr)) / modes_prod));
  }
  Outcome o;
  o.pass = l2 <= 1e-12 && nm <= 1e-12 && pe <= 1e-12 && cr <= 1e-12 && self <= 1e-12 && hist_fail == 0 &&
           undefined_mismatch == 0;
  o.detail = "max deviation l2 " + fmt("%.1e", l2) + ", nmi " + fmt("%.1e", nm) + ", pearson " + fmt("%.1e", pe) +
             ", compression " + fmt("%.1e", cr) + "; histogram mismatches " + std::to_string(hist_fail) +
             "; |nmi(t,t) - 1| " + fmt("%.1e", self);
  return o;
}

// ---------------------------------------------------------------- 12

Outcome criterion_12() {
  BenchOptions opt;
  opt.seed = 12;
  opt.delta = kDelta;
  const TimingReport r = bench_timing(opt);
  std::map<Format, std::pair<double, double>> t;  // baseline, randomized
  double max_dec = 0;
  for (const auto& row : r.rows) {
    (row.randomized ? t[row.format].second : t[row.format].first) = row.decompose_seconds;
    max_dec = std::max(max_dec, row.decompose_seconds);
  }
  bool ratios_ok = !t.empty();
  std::ostringstream d;
  for (const auto& [f, bt] : t) {
    const double ratio = bt.second / bt.first;
    ratios_ok = ratios_ok && ratio <= kTimingRatioLimit;
    d << format_name(f) << " " << fmt("%.2f", ratio) << " (" << fmt("%.3f", bt.first) << "/" << fmt("%.3f", bt.second)
      << " s), ";
  }
  d << "slowest decomposition " << fmt("%.2f s", max_dec);
  Outcome o;
  o.pass = ratios_ok && max_dec < kDecomposeBudgetSeconds;
  o.detail = "randomized/baseline: " + d.str();
  return o;
}

// ---------------------------------------------------------------- 8

Outcome criterion_8() {
  std::size_t violations = 0;
  for (double v : g_deltas)
    if (!(v >= kDelta && v <= 1.0)) ++violations;
  Outcome o;
  o.pass = violations == 0 && !g_deltas.empty();
  o.detail = std::to_string(g_deltas.size()) + " entries in " + std::to_string(g_records) +
             " perturbation records from every randomized run above; violations " + std::to_string(violations);
  return o;
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return Outcome{false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  std::map<int, std::pair<std::string, Outcome>> results;
  Fidelity fid;
  try {
    fid = criteria_1_and_2();
  } catch (const std::exception& e) {
    fid.c1 = fid.c2 = Outcome{false, std::string("exception: ") + e.what()};
  }
  results[1] = {"error bound", fid.c1};
  results[2] = {"randomization fidelity", fid.c2};
  results[3] = {"superdiagonal", guarded(criterion_3)};
  results[4] = {"compression ratio", guarded(criterion_4)};
  results[5] = {"tucker arithmetic", guarded(criterion_5)};
  results[6] = {"tt ops", guarded(criterion_6)};
  results[7] = {"tt rounding", guarded(criterion_7)};
  results[9] = {"dispersed transparency", guarded(criterion_9)};
  results[10] = {"sharing", guarded(criterion_10)};
  results[11] = {"metrics oracles", guarded(criterion_11)};
  results[12] = {"timing", guarded(criterion_12)};
  // Runs last: it audits every Δ drawn above.
  results[8] = {"perturbation bounds", guarded(criterion_8)};

  int failed = 0;
  for (const auto& [id, r] : results) {
    const auto& [name, o] = r;
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  }
  std::printf("%d/12 criteria passed\n", 12 - failed);
  return failed;
}
