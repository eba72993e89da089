#include "tnvault/decomp.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include <Eigen/SVD>

#include "tnvault/errors.hpp"
#include "tnvault/random.hpp"
#include "tnvault/sweep.hpp"

namespace tnvault {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_sweep_args(const DenseTensor& a, double eps,
                      const DecompositionOptions& opt) {
  require(a.order() >= 2, ErrorCode::kShapeMismatch,
          "decomposition needs order >= 2, got shape " +
              shape_string(a.shape()));
  require(eps > 0.0 && eps < 1.0, ErrorCode::kInvalidThreshold,
          "eps must lie in (0,1), got " + std::to_string(eps));
  if (opt.randomize) validate_threshold(opt.delta);
}

std::size_t cap_for(const DecompositionOptions& opt, std::size_t step) {
  return step < opt.max_ranks.size() ? opt.max_ranks[step] : 0;
}

// Reinterprets a column-major matrix with a new row count.
Matrix refold(const Matrix& m, std::size_t rows) {
  const auto total = static_cast<std::size_t>(m.size());
  return Eigen::Map<const Matrix>(m.data(), static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(total / rows));
}

DenseTensor as_tensor(const Matrix& m, Shape shape) {
  return DenseTensor(std::move(shape),
                     std::vector<double>(m.data(), m.data() + m.size()));
}

Vector singular_values(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m);
  require(svd.info() == Eigen::Success, ErrorCode::kNumericalFailure,
          "SVD did not converge");
  return svd.singularValues();
}

std::size_t rank_for_budget(const Vector& s, double budget_sq) {
  double tail = 0.0;
  auto r = static_cast<std::size_t>(s.size());
  for (Eigen::Index i = s.size(); i-- > 1;) {
    tail += s[i] * s[i];
    if (tail > budget_sq) break;
    r = static_cast<std::size_t>(i);
  }
  return std::max<std::size_t>(r, 1);
}

// ---- TR helpers

// Squared error of the TR step in the full tensor when m is truncated to r:
// tr(F^T G F) with F[(r0 + R0 rp), (i + I j)] = E[(rp + Rp i), (j + rest r0)].
double tr_step_error(const Matrix& m, const SvdResult& svd, std::size_t r,
                     const Matrix& gram, std::size_t r0_count,
                     std::size_t rank_prev, std::size_t mode_size) {
  const auto k = static_cast<Eigen::Index>(r);
  const Matrix e = m - svd.u.leftCols(k) * svd.s.head(k).asDiagonal() *
                           svd.v.leftCols(k).transpose();
  const std::size_t rest = static_cast<std::size_t>(m.cols()) / r0_count;
  Matrix f(static_cast<Eigen::Index>(r0_count * rank_prev),
           static_cast<Eigen::Index>(mode_size * rest));
  for (std::size_t a = 0; a < r0_count; ++a)
    for (std::size_t j = 0; j < rest; ++j)
      for (std::size_t i = 0; i < mode_size; ++i)
        for (std::size_t p = 0; p < rank_prev; ++p)
          f(static_cast<Eigen::Index>(a + r0_count * p),
            static_cast<Eigen::Index>(i + mode_size * j)) =
              e(static_cast<Eigen::Index>(p + rank_prev * i),
                static_cast<Eigen::Index>(j + rest * a));
  return (f.array() * (gram * f).array()).sum();
}

std::size_t tr_weighted_rank(const Matrix& m, const SvdResult& svd,
                             const Matrix& gram, std::size_t r0_count,
                             std::size_t rank_prev, std::size_t mode_size,
                             double budget, std::size_t cap) {
  const double limit = budget * budget;
  auto fits = [&](std::size_t r) {
    return tr_step_error(m, svd, r, gram, r0_count, rank_prev, mode_size) <=
           limit;
  };
  const std::size_t n = svd.rank();
  std::size_t hi = cap > 0 ? std::min(n, cap) : n;
  if (hi < n && !fits(hi)) return hi;
  std::size_t lo = 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (fits(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

// G' = sum_i (C_i ⊗ I_R0)^T G (C_i ⊗ I_R0) for core C [Rp, I, R].
Matrix tr_gram_update(const Matrix& gram, const DenseTensor& core,
                      std::size_t r0_count) {
  const std::size_t rp = core.dim(0), modes = core.dim(1), r = core.dim(2);
  const Matrix eye = Matrix::Identity(static_cast<Eigen::Index>(r0_count),
                                      static_cast<Eigen::Index>(r0_count));
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(r * r0_count),
                            static_cast<Eigen::Index>(r * r0_count));
  Matrix ci(static_cast<Eigen::Index>(rp), static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < modes; ++i) {
    for (std::size_t b = 0; b < r; ++b)
      for (std::size_t a = 0; a < rp; ++a)
        ci(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            core({a, i, b});
    const Matrix k = kronecker(ci, eye);
    out.noalias() += k.transpose() * gram * k;
  }
  return out;
}

// ---- Tucker helpers

struct TuckerPass {
  DenseTensor core;
  std::vector<Matrix> factors;  // empty matrix for untouched modes
  std::vector<PerturbationRecord> records;
};

// Sequential HOSVD over the modes with ranks[k] > 0, then the first-factor
// re-randomization on mode 0.
TuckerPass tucker_pass(const DenseTensor& a,
                       const std::vector<std::size_t>& ranks, bool randomize,
                       double delta, std::uint64_t seed) {
  TuckerPass out{a, std::vector<Matrix>(a.order()), {}};
  for (std::size_t k = 0; k < a.order(); ++k) {
    if (ranks[k] == 0) continue;
    const SvdResult svd =
        truncated_svd(matricize(out.core, k), FixedRank{ranks[k]});
    Vector d = Vector::Ones(static_cast<Eigen::Index>(svd.rank()));
    if (randomize) {
      out.records.push_back(sample_perturbation(
          svd.rank(), delta, perturbation_seed(seed, k + 1), k + 1));
      d = factors_vector(out.records.back());
    }
    out.core = mode_product(out.core, d.asDiagonal() * svd.u.transpose(), k);
    out.factors[k] = svd.u * d.cwiseInverse().asDiagonal();
  }
  if (randomize && ranks[0] > 0) {
    const std::size_t r = static_cast<std::size_t>(out.factors[0].cols());
    const SvdResult svd = truncate(
        svd_of_product(out.factors[0], matricize(out.core, 0)), r);
    out.records.push_back(
        sample_perturbation(svd.rank(), delta, perturbation_seed(seed, 0), 0));
    const Vector d = factors_vector(out.records.back());
    Shape shape = out.core.shape();
    shape[0] = svd.rank();
    out.core = dematricize(
        (d.cwiseProduct(svd.s)).asDiagonal() * svd.v.transpose(), 0, shape);
    out.factors[0] = svd.u * d.cwiseInverse().asDiagonal();
  }
  return out;
}

// Position ranges of every node in the tree's leaf order.
std::vector<std::pair<std::size_t, std::size_t>> node_ranges(
    const DimensionTree& tree) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges(tree.size());
  std::size_t next = 0;
  std::function<void(std::size_t)> walk = [&](std::size_t id) {
    const auto& n = tree.node(id);
    const std::size_t lo = next;
    if (n.is_leaf()) {
      ++next;
    } else {
      walk(static_cast<std::size_t>(n.left));
      walk(static_cast<std::size_t>(n.right));
    }
    ranges[id] = {lo, next};
  };
  walk(0);
  return ranges;
}

DenseTensor to_leaf_order(const DenseTensor& a, const DimensionTree& tree) {
  const auto order = tree.leaf_order();
  return permute_axes(a, order);
}

}  // namespace

std::pair<std::size_t, std::size_t> split_ring_rank(std::size_t r) {
  std::pair<std::size_t, std::size_t> best{1, r};
  for (std::size_t a = 1; a * a <= r; ++a) {
    if (r % a == 0) best = {a, r / a};
  }
  return best;
}

// ---------------------------------------------------------------- TT

Decomposition<TTRepresentation> tt_svd(const DenseTensor& a, double eps,
                                       const DecompositionOptions& opt) {
  check_sweep_args(a, eps, opt);
  const auto start = Clock::now();
  const std::size_t n = a.order();
  const Shape& modes = a.shape();
  Decomposition<TTRepresentation> out;
  out.report.format = Format::kTT;

  Matrix m = a.as_matrix(modes[0], a.size() / modes[0]);
  Matrix gram;
  std::size_t rank_prev = 1;
  const double norm = a.norm();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    TTStepConfig cfg;
    cfg.step = k;
    cfg.order = n;
    cfg.eps = eps;
    cfg.norm = norm;
    cfg.randomize = opt.randomize;
    cfg.delta = opt.delta;
    cfg.seed = opt.seed;
    cfg.cap = cap_for(opt, k);
    cfg.need_gram = k + 2 < n;
    TTStepOutput step = tt_truncate_step(m, rank_prev, modes[k], gram, cfg);
    rank_prev = step.core.dim(2);
    out.rep.cores.push_back(std::move(step.core));
    if (step.perturbation) out.report.perturbations.push_back(*step.perturbation);
    m = refold(step.carry, rank_prev * modes[k + 1]);
    gram = std::move(step.gram);
  }
  out.rep.cores.push_back(as_tensor(m, {rank_prev, modes[n - 1], 1}));

  if (opt.randomize) {
    out.report.perturbations.push_back(rerandomize_bond(
        out.rep.cores[0], out.rep.cores[1], opt.delta, opt.seed, 0));
  }
  out.report.seconds = seconds_since(start);
  out.report.ranks = out.rep.ranks();
  if (opt.compute_error) {
    out.report.relative_error = relative_error(reconstruct(out.rep), a);
  }
  return out;
}

// ---------------------------------------------------------------- TR

Decomposition<TRRepresentation> tr_svd(const DenseTensor& a, double eps,
                                       const DecompositionOptions& opt) {
  check_sweep_args(a, eps, opt);
  const auto start = Clock::now();
  const std::size_t n = a.order();
  const Shape& modes = a.shape();
  const double nd = static_cast<double>(n);
  const double norm = a.norm();
  Decomposition<TRRepresentation> out;
  out.report.format = Format::kTR;

  // First step: split the leading rank over the ring bond.
  SvdResult svd = full_svd(a.as_matrix(modes[0], a.size() / modes[0]));
  std::size_t r = rank_for_tolerance(svd.s, std::sqrt(2.0) * eps / std::sqrt(nd));
  if (cap_for(opt, 0) > 0) r = std::min(r, cap_for(opt, 0));
  svd = truncate(svd, r);
  r = svd.rank();
  auto [r0, r1] = split_ring_rank(r);
  const bool degenerate = r0 == 1 && r > 1;
  if (degenerate) {
    require(!(opt.strict_ring_split &&
              (opt.max_ring_rank == 0 || r1 > opt.max_ring_rank)),
            ErrorCode::kRankSplitFailure,
            "first rank " + std::to_string(r) +
                " has no balanced split (prime); ring rank would be 1");
    out.report.ring_split_fallback = true;
  }
  Vector d = Vector::Ones(static_cast<Eigen::Index>(r));
  if (opt.randomize) {
    out.report.perturbations.push_back(
        sample_perturbation(r, opt.delta, perturbation_seed(opt.seed, 1), 1));
    d = factors_vector(out.report.perturbations.back());
  }
  const Matrix ud = svd.u * d.cwiseInverse().asDiagonal();
  const std::size_t perm_first[] = {1, 0, 2};
  out.rep.cores.push_back(
      permute_axes(as_tensor(ud, {modes[0], r0, r1}), perm_first));
  const std::size_t rest_all = a.size() / modes[0];
  const Matrix sv = (d.cwiseProduct(svd.s)).asDiagonal() * svd.v.transpose();
  const std::size_t perm_carry[] = {1, 2, 0};
  const DenseTensor carried =
      permute_axes(as_tensor(sv, {r0, r1, rest_all}), perm_carry);
  Matrix m = carried.as_matrix(r1 * modes[1], carried.size() / (r1 * modes[1]));
  Matrix gram;
  if (opt.randomize && n > 2) gram = ud.transpose() * ud;

  std::size_t rank_prev = r1;
  const double budget =
      n > 2 ? eps * norm * std::sqrt(1.0 - 2.0 / nd) / (nd - 2.0) : 0.0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    svd = full_svd(m);
    const std::size_t cap = cap_for(opt, k);
    if (opt.randomize) {
      r = tr_weighted_rank(m, svd, gram, r0, rank_prev, modes[k], budget, cap);
    } else {
      r = rank_for_tolerance(svd.s, eps / std::sqrt(nd));
      if (cap > 0) r = std::min(r, cap);
    }
    svd = truncate(svd, r);
    r = svd.rank();
    d = Vector::Ones(static_cast<Eigen::Index>(r));
    if (opt.randomize) {
      out.report.perturbations.push_back(sample_perturbation(
          r, opt.delta, perturbation_seed(opt.seed, k + 1), k + 1));
      d = factors_vector(out.report.perturbations.back());
    }
    const Matrix uk = svd.u * d.cwiseInverse().asDiagonal();
    out.rep.cores.push_back(as_tensor(uk, {rank_prev, modes[k], r}));
    if (opt.randomize && k + 2 < n) {
      gram = tr_gram_update(gram, out.rep.cores.back(), r0);
    }
    m = refold((d.cwiseProduct(svd.s)).asDiagonal() * svd.v.transpose(),
               r * modes[k + 1]);
    rank_prev = r;
  }
  out.rep.cores.push_back(as_tensor(m, {rank_prev, modes[n - 1], r0}));

  if (opt.randomize) {
    out.report.perturbations.push_back(rerandomize_bond(
        out.rep.cores[0], out.rep.cores[1], opt.delta, opt.seed, 0));
  }
  out.report.seconds = seconds_since(start);
  out.report.ranks = out.rep.ranks();
  if (opt.compute_error) {
    out.report.relative_error = relative_error(reconstruct(out.rep), a);
  }
  return out;
}

// ---------------------------------------------------------------- Tucker

Decomposition<TuckerRepresentation> rtd(const DenseTensor& a,
                                        const std::vector<std::size_t>& ranks,
                                        const DecompositionOptions& opt) {
  require(ranks.size() == a.order(), ErrorCode::kShapeMismatch,
          "need one rank per mode (" + std::to_string(a.order()) + "), got " +
              std::to_string(ranks.size()));
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    require(ranks[k] >= 1, ErrorCode::kInvalidArgument, "ranks must be >= 1");
    require(ranks[k] <= a.dim(k), ErrorCode::kRankTooLarge,
            "rank " + std::to_string(ranks[k]) + " exceeds mode " +
                std::to_string(k + 1) + " size " + std::to_string(a.dim(k)));
  }
  if (opt.randomize) validate_threshold(opt.delta);
  const auto start = Clock::now();
  TuckerPass pass = tucker_pass(a, ranks, opt.randomize, opt.delta, opt.seed);
  Decomposition<TuckerRepresentation> out;
  out.report.format = Format::kTucker;
  out.rep.core = std::move(pass.core);
  out.rep.factors = std::move(pass.factors);
  out.report.perturbations = std::move(pass.records);
  out.report.seconds = seconds_since(start);
  out.report.ranks = out.rep.ranks();
  if (opt.compute_error) {
    out.report.relative_error = relative_error(reconstruct(out.rep), a);
  }
  return out;
}

// ---------------------------------------------------------------- HT

Decomposition<HTRepresentation> rht(const DenseTensor& a,
                                    const DimensionTree& tree,
                                    const std::vector<std::size_t>& rank_map,
                                    const DecompositionOptions& opt) {
  require(a.order() >= 2, ErrorCode::kShapeMismatch,
          "HT needs order >= 2");
  tree.validate(a.order());
  require(rank_map.size() == tree.size(), ErrorCode::kShapeMismatch,
          "rank map needs one entry per tree node (" +
              std::to_string(tree.size()) + ")");
  for (std::size_t i = 1; i < tree.size(); ++i) {
    const auto& node = tree.node(i);
    require(rank_map[i] >= 1, ErrorCode::kInvalidArgument,
            "node ranks must be >= 1");
    if (node.is_leaf()) {
      require(rank_map[i] <= a.dim(node.modes[0]), ErrorCode::kRankTooLarge,
              "leaf rank " + std::to_string(rank_map[i]) + " exceeds mode " +
                  std::to_string(node.modes[0] + 1) + " size");
    }
  }
  if (opt.randomize) validate_threshold(opt.delta);
  const auto start = Clock::now();

  const DenseTensor permuted = to_leaf_order(a, tree);
  const auto ranges = node_ranges(tree);
  const Shape& pshape = permuted.shape();
  auto dim_of = [&](std::size_t id) {
    std::size_t d = 1;
    for (std::size_t p = ranges[id].first; p < ranges[id].second; ++p)
      d *= pshape[p];
    return d;
  };

  Decomposition<HTRepresentation> out;
  out.report.format = Format::kHT;
  out.rep.tree = tree;
  out.rep.mode_sizes = a.shape();
  out.rep.ranks.assign(tree.size(), 1);
  out.rep.blocks.resize(tree.size());

  std::function<void(std::size_t, const Matrix&)> visit =
      [&](std::size_t id, const Matrix& basis) {
        const auto& node = tree.node(id);
        const auto l = static_cast<std::size_t>(node.left);
        const auto r = static_cast<std::size_t>(node.right);
        const std::size_t dl = dim_of(l), dr = dim_of(r);
        const auto rt = static_cast<std::size_t>(basis.cols());
        const DenseTensor t = as_tensor(basis, {dl, dr, rt});
        TuckerPass pass =
            tucker_pass(t, {rank_map[l], rank_map[r], 0}, opt.randomize,
                        opt.delta,
                        derive_seed(opt.seed, streams::kPerturbation,
                                    0x10000 + id));
        for (auto& rec : pass.records) out.report.perturbations.push_back(rec);
        out.rep.blocks[id] = std::move(pass.core);
        for (auto [child, k] : {std::pair{l, 0}, std::pair{r, 1}}) {
          const Matrix& f = pass.factors[static_cast<std::size_t>(k)];
          out.rep.ranks[child] = static_cast<std::size_t>(f.cols());
          if (tree.node(child).is_leaf()) {
            out.rep.blocks[child] = as_tensor(
                f, {static_cast<std::size_t>(f.rows()),
                    static_cast<std::size_t>(f.cols())});
          } else {
            visit(child, f);
          }
        }
      };
  visit(0, permuted.as_matrix(permuted.size(), 1));

  out.report.seconds = seconds_since(start);
  out.report.ranks = out.rep.ranks;
  if (opt.compute_error) {
    out.report.relative_error = relative_error(reconstruct(out.rep), a);
  }
  return out;
}

// ---------------------------------------------------------------- ranks

std::vector<std::size_t> tucker_ranks_for_tolerance(const DenseTensor& a,
                                                    double eps) {
  const double n2 = a.norm() * a.norm();
  std::vector<std::size_t> ranks;
  for (std::size_t k = 0; k < a.order(); ++k) {
    ranks.push_back(rank_for_budget(singular_values(matricize(a, k)),
                                    eps * eps * n2 /
                                        static_cast<double>(a.order())));
  }
  return ranks;
}

std::vector<std::size_t> ht_ranks_for_tolerance(const DenseTensor& a,
                                                const DimensionTree& tree,
                                                double eps) {
  tree.validate(a.order());
  const DenseTensor permuted = to_leaf_order(a, tree);
  const auto ranges = node_ranges(tree);
  const double n2 = a.norm() * a.norm();
  const double budget =
      eps * eps * n2 / static_cast<double>(2 * a.order() - 2);
  std::vector<std::size_t> ranks(tree.size(), 1);
  for (std::size_t id = 1; id < tree.size(); ++id) {
    std::size_t left = 1, mid = 1, right = 1;
    for (std::size_t p = 0; p < permuted.order(); ++p) {
      if (p < ranges[id].first) {
        left *= permuted.dim(p);
      } else if (p < ranges[id].second) {
        mid *= permuted.dim(p);
      } else {
        right *= permuted.dim(p);
      }
    }
    const DenseTensor grouped = reshape(permuted, {left, mid, right});
    ranks[id] = rank_for_budget(singular_values(matricize(grouped, 1)), budget);
  }
  return ranks;
}

// ---------------------------------------------------------------- padding

DenseTensor pad_noise(const DenseTensor& a, const Shape& pad,
                      double amplitude, std::uint64_t seed) {
  require(pad.size() == a.order(), ErrorCode::kShapeMismatch,
          "need one pad size per mode");
  require(amplitude > 0.0, ErrorCode::kInvalidArgument,
          "noise amplitude must be positive");
  Shape shape = a.shape();
  for (std::size_t k = 0; k < shape.size(); ++k) shape[k] += pad[k];
  DenseTensor out(shape);
  Rng rng(derive_seed(seed, streams::kNoise, 0));
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t lin = 0; lin < out.size(); ++lin) {
    bool inside = true;
    for (std::size_t k = 0; k < shape.size(); ++k) inside &= idx[k] < a.dim(k);
    out[lin] = inside ? a.at(idx) : rng.uniform(-amplitude, amplitude);
    for (std::size_t k = 0; k < shape.size(); ++k) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

}  // namespace tnvault
