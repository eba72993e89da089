#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tnvault/linalg.hpp"
#include "tnvault/representations.hpp"

namespace tnvault {

struct DecompositionOptions {
  bool randomize = true;
  double delta = 0.05;
  std::uint64_t seed = 0;
  /// Optional per-step rank caps for the TT/TR sweeps (0 = uncapped). For
  /// TR the first entry caps the product R_0 * R_1.
  std::vector<std::size_t> max_ranks;
  /// TR only: largest ring rank R_1 accepted from the first split (0 = any).
  /// A larger split falls back to R_0 = 1 and is reported, or throws
  /// RankSplitFailure when `strict_ring_split` is set.
  std::size_t max_ring_rank = 0;
  bool strict_ring_split = false;
  /// Reconstructs once at the end and fills relative_error.
  bool compute_error = false;
};

struct DecompositionReport {
  Format format = Format::kTT;
  /// TT/TR: R_0..R_N. Tucker: R_1..R_N. HT: one rank per tree node.
  std::vector<std::size_t> ranks;
  std::vector<PerturbationRecord> perturbations;
  double seconds = 0.0;
  std::optional<double> relative_error;
  /// TR: the first rank could not be split within max_ring_rank.
  bool ring_split_fallback = false;
};

template <typename Rep>
struct Decomposition {
  Rep rep;
  DecompositionReport report;
};

/// Sequential TT-SVD sweep with optional per-step perturbations and the
/// first-core re-randomization.
Decomposition<TTRepresentation> tt_svd(const DenseTensor& a, double eps,
                                       const DecompositionOptions& opt = {});

/// TR-SVD; the first rank is split as R_0 * R_1 with |R_0 - R_1| minimal and
/// R_0 <= R_1.
Decomposition<TRRepresentation> tr_svd(const DenseTensor& a, double eps,
                                       const DecompositionOptions& opt = {});

/// Sequentially truncated HOSVD at fixed ranks.
Decomposition<TuckerRepresentation> rtd(const DenseTensor& a,
                                        const std::vector<std::size_t>& ranks,
                                        const DecompositionOptions& opt = {});

/// Root-to-leaves HT: each internal node runs a two-mode rtd on its basis
/// reshaped to [d_left, d_right, R_t]. rank_map has one entry per tree node;
/// the root entry is ignored (always 1).
Decomposition<HTRepresentation> rht(const DenseTensor& a,
                                    const DimensionTree& tree,
                                    const std::vector<std::size_t>& rank_map,
                                    const DecompositionOptions& opt = {});

/// Per-mode ranks with tail energy <= eps^2 ||A||^2 / N, so that the
/// HOSVD error stays within eps ||A||.
std::vector<std::size_t> tucker_ranks_for_tolerance(const DenseTensor& a,
                                                    double eps);
/// Per-node ranks with tail energy <= eps^2 ||A||^2 / (2N - 2).
std::vector<std::size_t> ht_ranks_for_tolerance(const DenseTensor& a,
                                                const DimensionTree& tree,
                                                double eps);

/// Enlarges every mode by pad[k], keeps `a` in the leading block and fills
/// the rest with U([-amplitude, amplitude]) noise.
DenseTensor pad_noise(const DenseTensor& a, const Shape& pad,
                      double amplitude, std::uint64_t seed);

/// R_0 * R_1 == r with |R_0 - R_1| minimal and R_0 <= R_1.
std::pair<std::size_t, std::size_t> split_ring_rank(std::size_t r);

}  // namespace tnvault
