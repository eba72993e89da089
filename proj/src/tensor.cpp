#include "tnvault/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tnvault/errors.hpp"

namespace tnvault {

std::size_t shape_product(std::span<const std::size_t> shape) {
  std::size_t p = 1;
  for (auto s : shape) p *= s;
  return p;
}

std::string shape_string(std::span<const std::size_t> shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  require(!shape.empty(), ErrorCode::kShapeMismatch,
          "tensor needs at least one mode");
  for (auto s : shape) {
    require(s >= 1, ErrorCode::kShapeMismatch,
            "mode sizes must be positive, got " + shape_string(shape));
  }
}

// Sizes of the blocks before and after `mode`.
std::pair<std::size_t, std::size_t> split_around(const Shape& shape,
                                                 std::size_t mode) {
  std::size_t left = 1, right = 1;
  for (std::size_t k = 0; k < mode; ++k) left *= shape[k];
  for (std::size_t k = mode + 1; k < shape.size(); ++k) right *= shape[k];
  return {left, right};
}

}  // namespace

DenseTensor::DenseTensor() : shape_{1}, data_(1, 0.0) {}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(shape_product(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  require(shape_product(shape_) == data_.size(), ErrorCode::kShapeMismatch,
          "shape " + shape_string(shape_) + " does not match " +
              std::to_string(data_.size()) + " values");
}

DenseTensor DenseTensor::from_matrix(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return DenseTensor({static_cast<std::size_t>(m.rows()),
                      static_cast<std::size_t>(m.cols())},
                     std::move(data));
}

DenseTensor DenseTensor::filled(Shape shape, double value) {
  DenseTensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

std::size_t DenseTensor::linear_index(
    std::span<const std::size_t> index) const {
  require(index.size() == shape_.size(), ErrorCode::kIndexOutOfRange,
          "index arity does not match tensor order");
  std::size_t linear = 0, stride = 1;
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    require(index[k] < shape_[k], ErrorCode::kIndexOutOfRange,
            "index out of range for mode " + std::to_string(k));
    linear += index[k] * stride;
    stride *= shape_[k];
  }
  return linear;
}

double& DenseTensor::at(std::span<const std::size_t> index) {
  return data_[linear_index(index)];
}

double DenseTensor::at(std::span<const std::size_t> index) const {
  return data_[linear_index(index)];
}

Eigen::Map<const Matrix> DenseTensor::as_matrix(std::size_t rows,
                                                std::size_t cols) const {
  require(rows * cols == data_.size(), ErrorCode::kShapeMismatch,
          "matrix view size mismatch");
  return {data_.data(), static_cast<Eigen::Index>(rows),
          static_cast<Eigen::Index>(cols)};
}

Eigen::Map<Matrix> DenseTensor::as_matrix(std::size_t rows,
                                          std::size_t cols) {
  require(rows * cols == data_.size(), ErrorCode::kShapeMismatch,
          "matrix view size mismatch");
  return {data_.data(), static_cast<Eigen::Index>(rows),
          static_cast<Eigen::Index>(cols)};
}

double DenseTensor::norm() const {
  return Eigen::Map<const Vector>(data_.data(),
                                  static_cast<Eigen::Index>(data_.size()))
      .norm();
}

DenseTensor reshape(const DenseTensor& t, Shape new_shape) {
  require(shape_product(new_shape) == t.size(), ErrorCode::kShapeMismatch,
          "cannot reshape " + shape_string(t.shape()) + " to " +
              shape_string(new_shape));
  return DenseTensor(std::move(new_shape), t.values());
}

Matrix matricize(const DenseTensor& t, std::size_t mode) {
  require(mode < t.order(), ErrorCode::kIndexOutOfRange,
          "mode " + std::to_string(mode) + " out of range for order " +
              std::to_string(t.order()));
  const auto [left, right] = split_around(t.shape(), mode);
  const std::size_t n = t.dim(mode);
  Matrix m(static_cast<Eigen::Index>(n),
           static_cast<Eigen::Index>(left * right));
  const double* src = t.data().data();
  for (std::size_t r = 0; r < right; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < left; ++l) {
        m(static_cast<Eigen::Index>(i),
          static_cast<Eigen::Index>(l + left * r)) =
            src[l + left * (i + n * r)];
      }
    }
  }
  return m;
}

DenseTensor dematricize(const Matrix& m, std::size_t mode,
                        const Shape& shape) {
  require(mode < shape.size(), ErrorCode::kIndexOutOfRange,
          "mode out of range");
  const auto [left, right] = split_around(shape, mode);
  const std::size_t n = shape[mode];
  require(static_cast<std::size_t>(m.rows()) == n &&
              static_cast<std::size_t>(m.cols()) == left * right,
          ErrorCode::kShapeMismatch, "matrix does not unfold " +
                                         shape_string(shape));
  DenseTensor t(shape);
  double* dst = t.data().data();
  for (std::size_t r = 0; r < right; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < left; ++l) {
        dst[l + left * (i + n * r)] =
            m(static_cast<Eigen::Index>(i),
              static_cast<Eigen::Index>(l + left * r));
      }
    }
  }
  return t;
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& m,
                         std::size_t mode) {
  require(mode < t.order(), ErrorCode::kIndexOutOfRange, "mode out of range");
  require(static_cast<std::size_t>(m.cols()) == t.dim(mode),
          ErrorCode::kShapeMismatch,
          "matrix has " + std::to_string(m.cols()) + " columns, mode " +
              std::to_string(mode) + " has size " +
              std::to_string(t.dim(mode)));
  const auto [left, right] = split_around(t.shape(), mode);
  const auto n = static_cast<Eigen::Index>(t.dim(mode));
  const auto rows = m.rows();
  Shape out_shape = t.shape();
  out_shape[mode] = static_cast<std::size_t>(rows);
  DenseTensor out(out_shape);
  const auto l = static_cast<Eigen::Index>(left);
  for (std::size_t r = 0; r < right; ++r) {
    Eigen::Map<const Matrix> in_slab(t.data().data() + left * n * r, l, n);
    Eigen::Map<Matrix> out_slab(out.data().data() + left * rows * r, l, rows);
    out_slab.noalias() = in_slab * m.transpose();
  }
  return out;
}

std::vector<std::size_t> inverse_permutation(
    std::span<const std::size_t> perm) {
  std::vector<std::size_t> inv(perm.size(), perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) {
    require(perm[j] < perm.size() && inv[perm[j]] == perm.size(),
            ErrorCode::kInvalidPermutation, "not a permutation");
    inv[perm[j]] = j;
  }
  return inv;
}

DenseTensor permute_axes(const DenseTensor& t,
                         std::span<const std::size_t> perm) {
  require(perm.size() == t.order(), ErrorCode::kInvalidPermutation,
          "permutation length does not match tensor order");
  inverse_permutation(perm);  // validates
  const std::size_t n = t.order();
  Shape out_shape(n);
  std::vector<std::size_t> in_strides(n), strides(n);
  std::size_t s = 1;
  for (std::size_t k = 0; k < n; ++k) {
    in_strides[k] = s;
    s *= t.dim(k);
  }
  for (std::size_t j = 0; j < n; ++j) {
    out_shape[j] = t.dim(perm[j]);
    strides[j] = in_strides[perm[j]];
  }
  DenseTensor out(out_shape);
  std::vector<std::size_t> idx(n, 0);
  std::size_t src = 0;
  const double* in = t.data().data();
  for (double& v : out.data()) {
    v = in[src];
    for (std::size_t j = 0; j < n; ++j) {
      src += strides[j];
      if (++idx[j] < out_shape[j]) break;
      src -= strides[j] * out_shape[j];
      idx[j] = 0;
    }
  }
  return out;
}

namespace {

void require_same_order(const DenseTensor& a, const DenseTensor& b) {
  require(a.order() == b.order(), ErrorCode::kShapeMismatch,
          "operands have different orders " + shape_string(a.shape()) +
              " vs " + shape_string(b.shape()));
}

// Visits every multi-index of `shape` in column-major order.
template <typename F>
void for_each_index(const Shape& shape, F&& f) {
  std::vector<std::size_t> idx(shape.size(), 0);
  const std::size_t total = shape_product(shape);
  for (std::size_t lin = 0; lin < total; ++lin) {
    f(idx, lin);
    for (std::size_t k = 0; k < shape.size(); ++k) {
      if (++idx[k] < shape[k]) break;
      idx[k] = 0;
    }
  }
}

}  // namespace

DenseTensor direct_sum(const DenseTensor& a, const DenseTensor& b) {
  require_same_order(a, b);
  Shape shape(a.order());
  for (std::size_t k = 0; k < a.order(); ++k) shape[k] = a.dim(k) + b.dim(k);
  DenseTensor out(shape);
  std::vector<std::size_t> target(a.order());
  for_each_index(a.shape(), [&](const auto& idx, std::size_t lin) {
    out[out.linear_index(idx)] = a[lin];
  });
  for_each_index(b.shape(), [&](const auto& idx, std::size_t lin) {
    for (std::size_t k = 0; k < idx.size(); ++k) target[k] = idx[k] + a.dim(k);
    out[out.linear_index(target)] = b[lin];
  });
  return out;
}

DenseTensor kronecker(const DenseTensor& a, const DenseTensor& b) {
  require_same_order(a, b);
  Shape shape(a.order());
  for (std::size_t k = 0; k < a.order(); ++k) shape[k] = a.dim(k) * b.dim(k);
  DenseTensor out(shape);
  std::vector<std::size_t> target(a.order());
  for_each_index(a.shape(), [&](const auto& ia, std::size_t la) {
    for_each_index(b.shape(), [&](const auto& ib, std::size_t lb) {
      for (std::size_t k = 0; k < ia.size(); ++k) {
        target[k] = ia[k] * b.dim(k) + ib[k];
      }
      out[out.linear_index(target)] = a[la] * b[lb];
    });
  });
  return out;
}

DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          "hadamard needs equal shapes " + shape_string(a.shape()) + " vs " +
              shape_string(b.shape()));
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Matrix partial_direct_sum(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorCode::kShapeMismatch,
          "partial direct sum needs equal row counts");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Matrix partial_kronecker(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorCode::kShapeMismatch,
          "partial kronecker needs equal row counts");
  Matrix out(a.rows(), a.cols() * b.cols());
  for (Eigen::Index ja = 0; ja < a.cols(); ++ja) {
    for (Eigen::Index jb = 0; jb < b.cols(); ++jb) {
      out.col(ja * b.cols() + jb) = a.col(ja).cwiseProduct(b.col(jb));
    }
  }
  return out;
}

Matrix direct_sum(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

DenseTensor binary_structural(StructuralKind kind, const DenseTensor& a,
                              const DenseTensor& b) {
  switch (kind) {
    case StructuralKind::kDirectSum: return direct_sum(a, b);
    case StructuralKind::kHadamard: return hadamard(a, b);
    case StructuralKind::kKronecker: return kronecker(a, b);
    case StructuralKind::kPartialDirectSum:
    case StructuralKind::kPartialKronecker: {
      require(a.order() == 2 && b.order() == 2, ErrorCode::kShapeMismatch,
              "partial operations are defined on matrices");
      const Matrix r = binary_structural(
          kind, Matrix(a.as_matrix(a.dim(0), a.dim(1))),
          Matrix(b.as_matrix(b.dim(0), b.dim(1))));
      return DenseTensor::from_matrix(r);
    }
  }
  fail(ErrorCode::kInvalidArgument, "unknown structural kind");
}

Matrix binary_structural(StructuralKind kind, const Matrix& a,
                         const Matrix& b) {
  switch (kind) {
    case StructuralKind::kDirectSum: return direct_sum(a, b);
    case StructuralKind::kPartialDirectSum: return partial_direct_sum(a, b);
    case StructuralKind::kKronecker: return kronecker(a, b);
    case StructuralKind::kPartialKronecker: return partial_kronecker(a, b);
    case StructuralKind::kHadamard:
      require(a.rows() == b.rows() && a.cols() == b.cols(),
              ErrorCode::kShapeMismatch, "hadamard needs equal shapes");
      return a.cwiseProduct(b);
  }
  fail(ErrorCode::kInvalidArgument, "unknown structural kind");
}

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          "addition needs equal shapes");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          "subtraction needs equal shapes");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

DenseTensor operator*(double s, const DenseTensor& a) {
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

double relative_error(const DenseTensor& approx, const DenseTensor& exact) {
  const double diff = (approx - exact).norm();
  const double ref = exact.norm();
  return ref > 0.0 ? diff / ref : diff;
}

DenseTensor leading_block(const DenseTensor& t, const Shape& extent) {
  require(extent.size() == t.order(), ErrorCode::kShapeMismatch,
          "block extent arity mismatch");
  for (std::size_t k = 0; k < extent.size(); ++k) {
    require(extent[k] >= 1 && extent[k] <= t.dim(k), ErrorCode::kShapeMismatch,
            "block extent exceeds tensor shape");
  }
  DenseTensor out(extent);
  for_each_index(extent, [&](const auto& idx, std::size_t lin) {
    out[lin] = t.at(idx);
  });
  return out;
}

DenseTensor superdiagonal(std::size_t order, std::size_t size) {
  DenseTensor t(Shape(order, size));
  std::vector<std::size_t> idx(order);
  for (std::size_t i = 0; i < size; ++i) {
    std::fill(idx.begin(), idx.end(), i);
    t.at(idx) = 1.0;
  }
  return t;
}

}  // namespace tnvault
