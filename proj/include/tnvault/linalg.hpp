#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "tnvault/tensor.hpp"

namespace tnvault {

/// Thin SVD m ≈ u * diag(s) * v^T with s descending. Columns of u are
/// sign-canonical: the largest-magnitude entry of each is nonnegative.
struct SvdResult {
  Matrix u;
  Vector s;
  Matrix v;

  std::size_t rank() const { return static_cast<std::size_t>(s.size()); }
  Matrix reconstruct() const;
};

struct FixedRank {
  std::size_t rank;
};

/// Keeps the smallest r >= 1 whose discarded tail energy satisfies
/// sum_{i>r} s_i^2 <= tol^2 * ||m||_F^2.
struct RelTol {
  double tol;
};

using TruncationRule = std::variant<FixedRank, RelTol>;

/// All min(rows, cols) singular triples, sign-canonicalized.
SvdResult full_svd(const Matrix& m);
SvdResult truncated_svd(const Matrix& m, const TruncationRule& rule);

/// Keeps the leading `rank` triples (clamped to what is available).
SvdResult truncate(const SvdResult& svd, std::size_t rank);

/// Rank selected by the RelTol rule for singular values `s`.
std::size_t rank_for_tolerance(const Vector& s, double rel_tol);

/// SVD of x * y computed from the factors (QR of x, LQ of y) without
/// forming the product; at most x.cols() triples.
SvdResult svd_of_product(const Matrix& x, const Matrix& y);

/// m = l * q with q having orthonormal rows (r x cols) and l lower
/// trapezoidal (rows x r), r = min(rows, cols). diag(l) is nonnegative.
struct LqResult {
  Matrix l;
  Matrix q;
};
LqResult lq_factor(const Matrix& m);

/// Thin QR with nonnegative diag(r).
struct QrResult {
  Matrix q;
  Matrix r;
};
QrResult qr_factor(const Matrix& m);

/// Diagonal entries of one perturbation matrix, drawn i.i.d. from U([δ,1]).
struct PerturbationRecord {
  std::size_t step = 0;
  std::uint64_t seed = 0;
  double threshold = 1.0;
  std::vector<double> factors;
};

/// Throws InvalidThreshold unless 0 < threshold <= 1.
void validate_threshold(double threshold);

PerturbationRecord sample_perturbation(std::size_t rank, double threshold,
                                       std::uint64_t seed,
                                       std::size_t step = 0);

/// The identity record used when randomization is off.
PerturbationRecord identity_perturbation(std::size_t rank,
                                         std::size_t step = 0);

Vector factors_vector(const PerturbationRecord& rec);

}  // namespace tnvault
