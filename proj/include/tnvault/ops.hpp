#pragma once

#include <optional>
#include <vector>

#include "tnvault/decomp.hpp"
#include "tnvault/representations.hpp"

namespace tnvault {

enum class TuckerOp { kAdd, kDirectSum, kHadamard, kKronecker };

/// add: core ⊕, factors ⊞. direct_sum: core ⊕, factors ⊕.
/// hadamard: core ⊗, factors ⊠. kronecker: core ⊗, factors ⊗.
TuckerRepresentation tucker_binary(TuckerOp op, const TuckerRepresentation& a,
                                   const TuckerRepresentation& b);

/// Operator in TT format; core k is [R_{k-1}, I_k, J_k, R_k] and maps
/// vectors over J_1..J_N to vectors over I_1..I_N.
struct TTMatrixRepresentation {
  std::vector<DenseTensor> cores;

  std::size_t order() const { return cores.size(); }
  Shape row_sizes() const;
  Shape col_sizes() const;
  std::vector<std::size_t> ranks() const;
  void validate() const;

  /// Rank-1 identity over the given mode sizes.
  static TTMatrixRepresentation identity(const Shape& sizes);
};

/// Dense (prod I) x (prod J) matrix; row/column indices are column-major
/// over the mode indices.
Matrix to_dense(const TTMatrixRepresentation& m);

// Per-core kernels. A node holding core k of both operands computes its
// result core with no other input.
DenseTensor tt_add_core(const DenseTensor& a, const DenseTensor& b,
                        std::size_t k, std::size_t order);
DenseTensor tt_hadamard_core(const DenseTensor& a, const DenseTensor& b);
DenseTensor tt_matvec_core(const DenseTensor& m, const DenseTensor& x);
DenseTensor tucker_binary_block(TuckerOp op, const DenseTensor& a,
                                const DenseTensor& b, bool is_core);

TTRepresentation tt_add(const TTRepresentation& a, const TTRepresentation& b);
TTRepresentation tt_hadamard(const TTRepresentation& a,
                             const TTRepresentation& b);
TTRepresentation tt_matvec(const TTMatrixRepresentation& m,
                           const TTRepresentation& x);
TTRepresentation tt_scale(const TTRepresentation& a, double s);
double tt_inner(const TTRepresentation& a, const TTRepresentation& b);
/// x^T A x.
double tt_quadratic_form(const TTMatrixRepresentation& m,
                         const TTRepresentation& x);

// ---- TT-rounding steps

/// Right-to-left step on core k: [R_{k-1}, I_k R_k] = L Q. The core becomes
/// Q (orthonormal rows) and L travels to core k-1.
struct OrthogonalizeStep {
  DenseTensor core;
  Matrix l;
};
OrthogonalizeStep round_orthogonalize_step(const DenseTensor& core);

/// core ×_3 l for core [a, I, R] and l R x r.
DenseTensor absorb_right_factor(const DenseTensor& core, const Matrix& l);

/// What travels from node k to node k+1 in the compression sweep: the
/// factor Δ S V^T, the Gram of the left interface and ||A||.
struct RoundCarry {
  Matrix factor;
  Matrix gram;
  double norm = 0.0;
};

struct CompressStep {
  DenseTensor core;
  std::optional<RoundCarry> carry;  // absent on the last core
  std::optional<PerturbationRecord> perturbation;
};

/// Left-to-right step on core k (after orthogonalization). Core 0 takes no
/// incoming carry.
CompressStep round_compress_step(const DenseTensor& core,
                                 const RoundCarry* incoming, std::size_t k,
                                 std::size_t order, double eps,
                                 const DecompositionOptions& opt);

/// Right-to-left LQ sweep then left-to-right truncated-SVD sweep with
/// optional perturbations; ||A - Â|| <= eps ||A||.
Decomposition<TTRepresentation> tt_round(const TTRepresentation& a, double eps,
                                         const DecompositionOptions& opt = {});

}  // namespace tnvault
