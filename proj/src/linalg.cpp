#include "tnvault/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "tnvault/errors.hpp"
#include "tnvault/random.hpp"

namespace tnvault {

namespace {

void canonicalize_signs(SvdResult& svd) {
  for (Eigen::Index j = 0; j < svd.u.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < svd.u.rows(); ++i) {
      const double a = std::abs(svd.u(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (svd.u(arg, j) < 0.0) {
      svd.u.col(j) *= -1.0;
      svd.v.col(j) *= -1.0;
    }
  }
}

void require_finite(const Matrix& m) {
  require(m.allFinite(), ErrorCode::kNumericalFailure,
          "matrix contains non-finite entries");
}

}  // namespace

Matrix SvdResult::reconstruct() const {
  return u * s.asDiagonal() * v.transpose();
}

SvdResult full_svd(const Matrix& m) {
  require(m.size() > 0, ErrorCode::kShapeMismatch, "empty matrix");
  require_finite(m);
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  require(svd.info() == Eigen::Success, ErrorCode::kNumericalFailure,
          "SVD did not converge");
  SvdResult out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  require(out.s.allFinite(), ErrorCode::kNumericalFailure,
          "SVD produced non-finite singular values");
  canonicalize_signs(out);
  return out;
}

SvdResult truncate(const SvdResult& svd, std::size_t rank) {
  const auto r = static_cast<Eigen::Index>(
      std::clamp<std::size_t>(rank, 1, svd.rank()));
  return SvdResult{svd.u.leftCols(r), svd.s.head(r), svd.v.leftCols(r)};
}

std::size_t rank_for_tolerance(const Vector& s, double rel_tol) {
  const auto n = static_cast<std::size_t>(s.size());
  const double total = s.squaredNorm();
  const double budget = rel_tol * rel_tol * total;
  // tail[r] = sum_{i >= r} s_i^2 (0-based), accumulated from the back.
  double tail = 0.0;
  std::size_t r = n;
  for (std::size_t i = n; i-- > 1;) {
    tail += s[static_cast<Eigen::Index>(i)] * s[static_cast<Eigen::Index>(i)];
    if (tail <= budget) {
      r = i;
    } else {
      break;
    }
  }
  return std::max<std::size_t>(r, 1);
}

SvdResult truncated_svd(const Matrix& m, const TruncationRule& rule) {
  SvdResult svd = full_svd(m);
  if (const auto* fixed = std::get_if<FixedRank>(&rule)) {
    require(fixed->rank >= 1, ErrorCode::kInvalidArgument,
            "fixed rank must be at least 1");
    return truncate(svd, fixed->rank);
  }
  const double tol = std::get<RelTol>(rule).tol;
  require(tol > 0.0 && tol < 1.0, ErrorCode::kInvalidThreshold,
          "relative tolerance must lie in (0,1)");
  return truncate(svd, rank_for_tolerance(svd.s, tol));
}

QrResult qr_factor(const Matrix& m) {
  require(m.size() > 0, ErrorCode::kShapeMismatch, "empty matrix");
  require_finite(m);
  const Eigen::Index r = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Matrix> qr(m);
  QrResult out;
  out.q = qr.householderQ() * Matrix::Identity(m.rows(), r);
  out.r = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < r; ++i) {
    if (out.r(i, i) < 0.0) {
      out.r.row(i) *= -1.0;
      out.q.col(i) *= -1.0;
    }
  }
  return out;
}

LqResult lq_factor(const Matrix& m) {
  QrResult qr = qr_factor(m.transpose());
  return LqResult{qr.r.transpose(), qr.q.transpose()};
}

SvdResult svd_of_product(const Matrix& x, const Matrix& y) {
  require(x.cols() == y.rows(), ErrorCode::kShapeMismatch,
          "inner dimensions of the product differ");
  const QrResult qx = qr_factor(x);
  const LqResult ly = lq_factor(y);
  SvdResult small = full_svd(qx.r * ly.l);
  SvdResult out{qx.q * small.u, small.s, ly.q.transpose() * small.v};
  canonicalize_signs(out);
  return out;
}

void validate_threshold(double threshold) {
  require(threshold > 0.0 && threshold <= 1.0, ErrorCode::kInvalidThreshold,
          "perturbation threshold must lie in (0,1], got " +
              std::to_string(threshold));
}

PerturbationRecord sample_perturbation(std::size_t rank, double threshold,
                                       std::uint64_t seed, std::size_t step) {
  validate_threshold(threshold);
  require(rank >= 1, ErrorCode::kInvalidArgument, "rank must be positive");
  PerturbationRecord rec{step, seed, threshold, {}};
  rec.factors.resize(rank);
  Rng rng(seed);
  for (double& f : rec.factors) f = rng.uniform(threshold, 1.0);
  return rec;
}

PerturbationRecord identity_perturbation(std::size_t rank, std::size_t step) {
  return PerturbationRecord{step, 0, 1.0, std::vector<double>(rank, 1.0)};
}

Vector factors_vector(const PerturbationRecord& rec) {
  return Eigen::Map<const Vector>(rec.factors.data(),
                                  static_cast<Eigen::Index>(rec.factors.size()));
}

}  // namespace tnvault
