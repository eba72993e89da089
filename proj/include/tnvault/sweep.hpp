#pragma once

#include <cstdint>
#include <optional>

#include "tnvault/linalg.hpp"
#include "tnvault/tensor.hpp"

// Single steps of the left-to-right truncation sweeps shared by TT-SVD,
// TR-SVD and TT-rounding. Local and dispersed execution both call these, so
// the two paths agree bit for bit.

namespace tnvault {

/// Seed of the perturbation drawn at sweep step `step` (0 is the first-core
/// post-pass). Any server can replay its own step from the master seed.
std::uint64_t perturbation_seed(std::uint64_t seed, std::size_t step);

struct TTStepConfig {
  std::size_t step = 0;   // 0-based position in the sweep
  std::size_t order = 2;  // N
  double eps = 0.1;
  double norm = 1.0;      // ||A||_F of the tensor being approximated
  bool randomize = false;
  double delta = 0.05;
  std::uint64_t seed = 0;
  std::size_t cap = 0;    // 0 = uncapped
  bool need_gram = true;  // false on the last step
};

struct TTStepOutput {
  DenseTensor core;  // [R_prev, I_k, r], holds U * inv(Δ)
  Matrix carry;      // Δ * S * V^T, r x cols
  Matrix gram;       // Gram of the new left interface (randomized only)
  std::optional<PerturbationRecord> perturbation;
};

/// Truncates m (rows R_prev * I_k) and splits it into core and carry.
///
/// Without randomization the rank follows RelTol(eps / sqrt(N-1)) on m.
/// With randomization the left interface is no longer orthonormal, so the
/// discarded energy is weighted by its Gram: the smallest r with
///   sum_{i>r} s_i^2 u_i^T (I ⊗ G) u_i <= b^2
/// where b = eps ||A|| / sqrt(N-1) at step 0 and
/// eps ||A|| / sqrt((N-1)(N-2)) afterwards. The step-0 error is orthogonal
/// to the later ones, so the total stays below eps ||A||.
/// An empty `gram` means identity.
TTStepOutput tt_truncate_step(const Matrix& m, std::size_t rank_prev,
                              std::size_t mode_size, const Matrix& gram,
                              const TTStepConfig& cfg);

/// Smallest r whose Gram-weighted tail energy fits in budget^2.
std::size_t weighted_rank(const SvdResult& svd, const Matrix& gram,
                          std::size_t mode_size, double budget);

/// Re-randomizes the bond between two adjacent cores [a, I, R] and [R, J, b]
/// from a fresh SVD of their product at fixed rank R. The product is never
/// formed.
PerturbationRecord rerandomize_bond(DenseTensor& left, DenseTensor& right,
                                    double delta, std::uint64_t seed,
                                    std::size_t step = 0);

}  // namespace tnvault
