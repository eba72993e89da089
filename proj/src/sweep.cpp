#include "tnvault/sweep.hpp"

#include <cmath>

#include "tnvault/errors.hpp"
#include "tnvault/random.hpp"

namespace tnvault {

namespace {

// (I_mode ⊗ G) * u for u with rows ordered r + R * i.
Matrix apply_block_gram(const Matrix& u, const Matrix& gram,
                        std::size_t mode_size) {
  const Eigen::Index r = gram.rows();
  Matrix out(u.rows(), u.cols());
  for (std::size_t i = 0; i < mode_size; ++i) {
    const Eigen::Index off = static_cast<Eigen::Index>(i) * r;
    out.middleRows(off, r).noalias() = gram * u.middleRows(off, r);
  }
  return out;
}

}  // namespace

std::uint64_t perturbation_seed(std::uint64_t seed, std::size_t step) {
  return derive_seed(seed, streams::kPerturbation, step);
}

std::size_t weighted_rank(const SvdResult& svd, const Matrix& gram,
                          std::size_t mode_size, double budget) {
  const Eigen::Index n = svd.s.size();
  Vector w = Vector::Ones(n);
  if (gram.size() > 0) {
    require(static_cast<std::size_t>(gram.rows()) * mode_size ==
                static_cast<std::size_t>(svd.u.rows()),
            ErrorCode::kShapeMismatch, "Gram does not match the left interface");
    const Matrix wu = apply_block_gram(svd.u, gram, mode_size);
    w = (svd.u.array() * wu.array()).colwise().sum().transpose();
  }
  const double limit = budget * budget;
  double tail = 0.0;
  std::size_t r = static_cast<std::size_t>(n);
  for (Eigen::Index i = n; i-- > 1;) {
    tail += svd.s[i] * svd.s[i] * std::max(w[i], 0.0);
    if (tail <= limit) {
      r = static_cast<std::size_t>(i);
    } else {
      break;
    }
  }
  return std::max<std::size_t>(r, 1);
}

TTStepOutput tt_truncate_step(const Matrix& m, std::size_t rank_prev,
                              std::size_t mode_size, const Matrix& gram,
                              const TTStepConfig& cfg) {
  require(static_cast<std::size_t>(m.rows()) == rank_prev * mode_size,
          ErrorCode::kShapeMismatch, "sweep matrix rows != R_prev * I_k");
  require(cfg.order >= 2, ErrorCode::kInvalidArgument, "order must be >= 2");
  SvdResult svd = full_svd(m);
  const double n1 = static_cast<double>(cfg.order - 1);
  std::size_t r = 0;
  if (cfg.randomize) {
    const double budget =
        cfg.step == 0 ? cfg.eps * cfg.norm / std::sqrt(n1)
                      : cfg.eps * cfg.norm /
                            std::sqrt(n1 * static_cast<double>(cfg.order - 2));
    r = weighted_rank(svd, gram, mode_size, budget);
  } else {
    r = rank_for_tolerance(svd.s, cfg.eps / std::sqrt(n1));
  }
  if (cfg.cap > 0) r = std::min(r, cfg.cap);
  svd = truncate(svd, r);
  r = svd.rank();

  TTStepOutput out;
  Vector d = Vector::Ones(static_cast<Eigen::Index>(r));
  if (cfg.randomize) {
    const std::size_t step = cfg.step + 1;
    out.perturbation = sample_perturbation(
        r, cfg.delta, perturbation_seed(cfg.seed, step), step);
    d = factors_vector(*out.perturbation);
  }
  const Matrix ud = svd.u * d.cwiseInverse().asDiagonal();
  out.core = DenseTensor({rank_prev, mode_size, r},
                         std::vector<double>(ud.data(), ud.data() + ud.size()));
  out.carry = (d.cwiseProduct(svd.s)).asDiagonal() * svd.v.transpose();
  if (cfg.randomize && cfg.need_gram) {
    out.gram = gram.size() > 0
                   ? Matrix(ud.transpose() * apply_block_gram(ud, gram, mode_size))
                   : Matrix(ud.transpose() * ud);
  }
  return out;
}

PerturbationRecord rerandomize_bond(DenseTensor& left, DenseTensor& right,
                                    double delta, std::uint64_t seed,
                                    std::size_t step) {
  require(left.order() == 3 && right.order() == 3 && left.dim(2) == right.dim(0),
          ErrorCode::kShapeMismatch, "cores do not share a bond");
  const std::size_t a = left.dim(0), i = left.dim(1);
  const std::size_t j = right.dim(1), b = right.dim(2);
  SvdResult svd = svd_of_product(left.as_matrix(a * i, left.dim(2)),
                                 right.as_matrix(right.dim(0), j * b));
  svd = truncate(svd, left.dim(2));
  const std::size_t r = svd.rank();
  PerturbationRecord rec =
      sample_perturbation(r, delta, perturbation_seed(seed, step), step);
  const Vector d = factors_vector(rec);
  const Matrix ud = svd.u * d.cwiseInverse().asDiagonal();
  const Matrix carry = (d.cwiseProduct(svd.s)).asDiagonal() * svd.v.transpose();
  left = DenseTensor({a, i, r}, std::vector<double>(ud.data(), ud.data() + ud.size()));
  right = DenseTensor({r, j, b},
                      std::vector<double>(carry.data(), carry.data() + carry.size()));
  return rec;
}

}  // namespace tnvault
