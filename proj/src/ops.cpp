#include "tnvault/ops.hpp"

#include <chrono>

#include "tnvault/errors.hpp"
#include "tnvault/sweep.hpp"

namespace tnvault {

namespace {

void require_same_modes(const Shape& a, const Shape& b, const char* what) {
  require(a == b, ErrorCode::kShapeMismatch,
          std::string(what) + ": mode sizes " + shape_string(a) + " vs " +
              shape_string(b));
}

Matrix as_matrix_copy(const DenseTensor& t) {
  return t.as_matrix(t.dim(0), t.dim(1));
}

DenseTensor matrix_tensor(const Matrix& m) {
  return DenseTensor({static_cast<std::size_t>(m.rows()),
                      static_cast<std::size_t>(m.cols())},
                     std::vector<double>(m.data(), m.data() + m.size()));
}

// Slice core[:, i, :] as an R x R' matrix.
Matrix slice(const DenseTensor& core, std::size_t i) {
  const std::size_t r0 = core.dim(0), n = core.dim(1), r1 = core.dim(2);
  Matrix out(static_cast<Eigen::Index>(r0), static_cast<Eigen::Index>(r1));
  for (std::size_t b = 0; b < r1; ++b)
    for (std::size_t a = 0; a < r0; ++a)
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          core[a + r0 * (i + n * b)];
  return out;
}

void put_slice(DenseTensor& core, std::size_t i, const Matrix& m) {
  const std::size_t r0 = core.dim(0), n = core.dim(1), r1 = core.dim(2);
  for (std::size_t b = 0; b < r1; ++b)
    for (std::size_t a = 0; a < r0; ++a)
      core[a + r0 * (i + n * b)] =
          m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
}

}  // namespace

// ---------------------------------------------------------------- Tucker

DenseTensor tucker_binary_block(TuckerOp op, const DenseTensor& a,
                                const DenseTensor& b, bool is_core) {
  if (is_core) {
    switch (op) {
      case TuckerOp::kAdd:
      case TuckerOp::kDirectSum:
        return direct_sum(a, b);
      case TuckerOp::kHadamard:
      case TuckerOp::kKronecker:
        return kronecker(a, b);
    }
  }
  const Matrix fa = as_matrix_copy(a), fb = as_matrix_copy(b);
  switch (op) {
    case TuckerOp::kAdd:
      return matrix_tensor(partial_direct_sum(fa, fb));
    case TuckerOp::kDirectSum:
      return matrix_tensor(direct_sum(fa, fb));
    case TuckerOp::kHadamard:
      return matrix_tensor(partial_kronecker(fa, fb));
    case TuckerOp::kKronecker:
      return matrix_tensor(kronecker(fa, fb));
  }
  fail(ErrorCode::kInvalidArgument, "unknown Tucker operation");
}

TuckerRepresentation tucker_binary(TuckerOp op, const TuckerRepresentation& a,
                                   const TuckerRepresentation& b) {
  a.validate();
  b.validate();
  require(a.order() == b.order(), ErrorCode::kShapeMismatch,
          "Tucker operands differ in order");
  if (op == TuckerOp::kAdd || op == TuckerOp::kHadamard) {
    require_same_modes(a.mode_sizes(), b.mode_sizes(), "tucker_binary");
  }
  TuckerRepresentation out;
  out.core = tucker_binary_block(op, a.core, b.core, true);
  for (std::size_t k = 0; k < a.order(); ++k) {
    out.factors.push_back(as_matrix_copy(tucker_binary_block(
        op, matrix_tensor(a.factors[k]), matrix_tensor(b.factors[k]), false)));
  }
  return out;
}

// ---------------------------------------------------------------- TT matrix

Shape TTMatrixRepresentation::row_sizes() const {
  Shape s;
  for (const auto& c : cores) s.push_back(c.dim(1));
  return s;
}

Shape TTMatrixRepresentation::col_sizes() const {
  Shape s;
  for (const auto& c : cores) s.push_back(c.dim(2));
  return s;
}

std::vector<std::size_t> TTMatrixRepresentation::ranks() const {
  std::vector<std::size_t> r;
  if (cores.empty()) return r;
  r.push_back(cores.front().dim(0));
  for (const auto& c : cores) r.push_back(c.dim(3));
  return r;
}

void TTMatrixRepresentation::validate() const {
  require(!cores.empty(), ErrorCode::kShapeMismatch, "no cores");
  for (std::size_t k = 0; k < cores.size(); ++k) {
    require(cores[k].order() == 4, ErrorCode::kShapeMismatch,
            "TT-matrix core " + std::to_string(k) + " is not 4th-order");
    if (k + 1 < cores.size()) {
      require(cores[k].dim(3) == cores[k + 1].dim(0), ErrorCode::kShapeMismatch,
              "TT-matrix rank mismatch after core " + std::to_string(k));
    }
  }
  require(cores.front().dim(0) == 1 && cores.back().dim(3) == 1,
          ErrorCode::kShapeMismatch, "TT-matrix boundary ranks must be 1");
}

TTMatrixRepresentation TTMatrixRepresentation::identity(const Shape& sizes) {
  TTMatrixRepresentation m;
  for (std::size_t n : sizes) {
    DenseTensor c({1, n, n, 1});
    for (std::size_t i = 0; i < n; ++i) c[i + n * i] = 1.0;
    m.cores.push_back(std::move(c));
  }
  return m;
}

Matrix to_dense(const TTMatrixRepresentation& m) {
  m.validate();
  // Treat each core as a TT core over the fused index i + I j.
  TTRepresentation fused;
  for (const auto& c : m.cores) {
    fused.cores.push_back(
        reshape(c, {c.dim(0), c.dim(1) * c.dim(2), c.dim(3)}));
  }
  const DenseTensor full = reconstruct(fused);
  const Shape rows = m.row_sizes(), cols = m.col_sizes();
  const std::size_t nrows = shape_product(rows), ncols = shape_product(cols);
  Matrix out(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(ncols));
  std::vector<std::size_t> idx(rows.size(), 0);
  for (std::size_t lin = 0; lin < full.size(); ++lin) {
    std::size_t row = 0, col = 0, rs = 1, cs = 1;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      row += (idx[k] % rows[k]) * rs;
      col += (idx[k] / rows[k]) * cs;
      rs *= rows[k];
      cs *= cols[k];
    }
    out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = full[lin];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (++idx[k] < rows[k] * cols[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------- TT kernels

DenseTensor tt_add_core(const DenseTensor& a, const DenseTensor& b,
                        std::size_t k, std::size_t order) {
  require(a.order() == 3 && b.order() == 3 && a.dim(1) == b.dim(1),
          ErrorCode::kShapeMismatch,
          "tt_add cores " + shape_string(a.shape()) + " and " +
              shape_string(b.shape()));
  const std::size_t n = a.dim(1);
  if (order == 1) return a + b;
  const bool first = k == 0, last = k + 1 == order;
  const std::size_t r0 = first ? 1 : a.dim(0) + b.dim(0);
  const std::size_t r1 = last ? 1 : a.dim(2) + b.dim(2);
  DenseTensor out({r0, n, r1});
  for (std::size_t i = 0; i < n; ++i) {
    Matrix s = Matrix::Zero(static_cast<Eigen::Index>(r0),
                            static_cast<Eigen::Index>(r1));
    const Matrix sa = slice(a, i), sb = slice(b, i);
    if (first || last) {
      s << sa, sb;  // side by side on core 0, stacked on core N-1
    } else {
      s.topLeftCorner(sa.rows(), sa.cols()) = sa;
      s.bottomRightCorner(sb.rows(), sb.cols()) = sb;
    }
    put_slice(out, i, s);
  }
  return out;
}

DenseTensor tt_hadamard_core(const DenseTensor& a, const DenseTensor& b) {
  require(a.order() == 3 && b.order() == 3 && a.dim(1) == b.dim(1),
          ErrorCode::kShapeMismatch, "tt_hadamard core shapes differ");
  const std::size_t n = a.dim(1);
  DenseTensor out({a.dim(0) * b.dim(0), n, a.dim(2) * b.dim(2)});
  for (std::size_t i = 0; i < n; ++i) {
    put_slice(out, i, kronecker(slice(a, i), slice(b, i)));
  }
  return out;
}

DenseTensor tt_matvec_core(const DenseTensor& m, const DenseTensor& x) {
  require(m.order() == 4 && x.order() == 3 && m.dim(2) == x.dim(1),
          ErrorCode::kShapeMismatch,
          "tt_matvec core " + shape_string(m.shape()) + " vs " +
              shape_string(x.shape()));
  const std::size_t ma = m.dim(0), ni = m.dim(1), nj = m.dim(2), mc = m.dim(3);
  const std::size_t xb = x.dim(0), xd = x.dim(2);
  DenseTensor out({ma * xb, ni, mc * xd});
  for (std::size_t i = 0; i < ni; ++i) {
    Matrix s = Matrix::Zero(static_cast<Eigen::Index>(ma * xb),
                            static_cast<Eigen::Index>(mc * xd));
    for (std::size_t j = 0; j < nj; ++j) {
      Matrix mij(static_cast<Eigen::Index>(ma), static_cast<Eigen::Index>(mc));
      for (std::size_t c = 0; c < mc; ++c)
        for (std::size_t a = 0; a < ma; ++a)
          mij(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) =
              m[a + ma * (i + ni * (j + nj * c))];
      s += kronecker(mij, slice(x, j));
    }
    put_slice(out, i, s);
  }
  return out;
}

TTRepresentation tt_add(const TTRepresentation& a, const TTRepresentation& b) {
  a.validate();
  b.validate();
  require_same_modes(a.mode_sizes(), b.mode_sizes(), "tt_add");
  TTRepresentation out;
  for (std::size_t k = 0; k < a.order(); ++k) {
    out.cores.push_back(tt_add_core(a.cores[k], b.cores[k], k, a.order()));
  }
  return out;
}

TTRepresentation tt_hadamard(const TTRepresentation& a,
                             const TTRepresentation& b) {
  a.validate();
  b.validate();
  require_same_modes(a.mode_sizes(), b.mode_sizes(), "tt_hadamard");
  TTRepresentation out;
  for (std::size_t k = 0; k < a.order(); ++k) {
    out.cores.push_back(tt_hadamard_core(a.cores[k], b.cores[k]));
  }
  return out;
}

TTRepresentation tt_matvec(const TTMatrixRepresentation& m,
                           const TTRepresentation& x) {
  m.validate();
  x.validate();
  require_same_modes(m.col_sizes(), x.mode_sizes(), "tt_matvec");
  TTRepresentation out;
  for (std::size_t k = 0; k < x.order(); ++k) {
    out.cores.push_back(tt_matvec_core(m.cores[k], x.cores[k]));
  }
  return out;
}

TTRepresentation tt_scale(const TTRepresentation& a, double s) {
  TTRepresentation out = a;
  out.cores.front() = s * out.cores.front();
  return out;
}

double tt_inner(const TTRepresentation& a, const TTRepresentation& b) {
  a.validate();
  b.validate();
  require_same_modes(a.mode_sizes(), b.mode_sizes(), "tt_inner");
  Matrix v = Matrix::Ones(1, 1);
  for (std::size_t k = 0; k < a.order(); ++k) {
    Matrix next = Matrix::Zero(static_cast<Eigen::Index>(a.cores[k].dim(2)),
                               static_cast<Eigen::Index>(b.cores[k].dim(2)));
    for (std::size_t i = 0; i < a.cores[k].dim(1); ++i) {
      next.noalias() += slice(a.cores[k], i).transpose() * v * slice(b.cores[k], i);
    }
    v = std::move(next);
  }
  return v(0, 0);
}

double tt_quadratic_form(const TTMatrixRepresentation& m,
                         const TTRepresentation& x) {
  return tt_inner(x, tt_matvec(m, x));
}

// ---------------------------------------------------------------- rounding

OrthogonalizeStep round_orthogonalize_step(const DenseTensor& core) {
  require(core.order() == 3, ErrorCode::kShapeMismatch, "core must be 3rd-order");
  const std::size_t r0 = core.dim(0), n = core.dim(1), r1 = core.dim(2);
  const LqResult lq = lq_factor(core.as_matrix(r0, n * r1));
  const auto r = static_cast<std::size_t>(lq.q.rows());
  return {DenseTensor({r, n, r1},
                      std::vector<double>(lq.q.data(), lq.q.data() + lq.q.size())),
          lq.l};
}

DenseTensor absorb_right_factor(const DenseTensor& core, const Matrix& l) {
  require(core.order() == 3 &&
              static_cast<std::size_t>(l.rows()) == core.dim(2),
          ErrorCode::kShapeMismatch, "factor does not match the core's right rank");
  const std::size_t r0 = core.dim(0), n = core.dim(1);
  const Matrix m = core.as_matrix(r0 * n, core.dim(2)) * l;
  return DenseTensor({r0, n, static_cast<std::size_t>(l.cols())},
                     std::vector<double>(m.data(), m.data() + m.size()));
}

CompressStep round_compress_step(const DenseTensor& core,
                                 const RoundCarry* incoming, std::size_t k,
                                 std::size_t order, double eps,
                                 const DecompositionOptions& opt) {
  require(core.order() == 3, ErrorCode::kShapeMismatch, "core must be 3rd-order");
  require((k == 0) == (incoming == nullptr), ErrorCode::kProtocolViolation,
          "compress step " + std::to_string(k) +
              (k == 0 ? " must not take a carry" : " needs the carry from k-1"));
  DenseTensor merged = core;
  double norm = 0.0;
  Matrix gram;
  if (incoming) {
    require(static_cast<std::size_t>(incoming->factor.cols()) == core.dim(0),
            ErrorCode::kShapeMismatch, "carry does not match the core");
    const Matrix m =
        incoming->factor * core.as_matrix(core.dim(0), core.dim(1) * core.dim(2));
    merged = DenseTensor(
        {static_cast<std::size_t>(m.rows()), core.dim(1), core.dim(2)},
        std::vector<double>(m.data(), m.data() + m.size()));
    norm = incoming->norm;
    gram = incoming->gram;
  } else {
    norm = core.norm();
  }
  CompressStep out;
  if (k + 1 == order) {
    out.core = std::move(merged);
    return out;
  }
  const std::size_t r0 = merged.dim(0), n = merged.dim(1);
  TTStepConfig cfg;
  cfg.step = k;
  cfg.order = order;
  cfg.eps = eps;
  cfg.norm = norm;
  cfg.randomize = opt.randomize;
  cfg.delta = opt.delta;
  cfg.seed = opt.seed;
  cfg.cap = k < opt.max_ranks.size() ? opt.max_ranks[k] : 0;
  cfg.need_gram = k + 2 < order;
  TTStepOutput step =
      tt_truncate_step(merged.as_matrix(r0 * n, merged.dim(2)), r0, n, gram, cfg);
  out.core = std::move(step.core);
  out.carry = RoundCarry{std::move(step.carry), std::move(step.gram), norm};
  out.perturbation = std::move(step.perturbation);
  return out;
}

Decomposition<TTRepresentation> tt_round(const TTRepresentation& a, double eps,
                                         const DecompositionOptions& opt) {
  a.validate();
  require(eps > 0.0 && eps < 1.0, ErrorCode::kInvalidThreshold,
          "eps must lie in (0,1), got " + std::to_string(eps));
  if (opt.randomize) validate_threshold(opt.delta);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = a.order();
  std::vector<DenseTensor> cores = a.cores;
  for (std::size_t k = n; k-- > 1;) {
    OrthogonalizeStep step = round_orthogonalize_step(cores[k]);
    cores[k] = std::move(step.core);
    cores[k - 1] = absorb_right_factor(cores[k - 1], step.l);
  }
  Decomposition<TTRepresentation> out;
  out.report.format = Format::kTT;
  std::optional<RoundCarry> carry;
  for (std::size_t k = 0; k < n; ++k) {
    CompressStep step = round_compress_step(
        cores[k], carry ? &*carry : nullptr, k, n, eps, opt);
    out.rep.cores.push_back(std::move(step.core));
    if (step.perturbation) out.report.perturbations.push_back(*step.perturbation);
    carry = std::move(step.carry);
  }
  out.report.seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  out.report.ranks = out.rep.ranks();
  return out;
}

}  // namespace tnvault
