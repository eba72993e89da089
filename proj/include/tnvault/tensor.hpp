#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tnvault {

using Shape = std::vector<std::size_t>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

std::size_t shape_product(std::span<const std::size_t> shape);
std::string shape_string(std::span<const std::size_t> shape);

/// Dense N-dimensional array of doubles stored in column-major order
/// (first index varies fastest). Every mode size is at least 1.
class DenseTensor {
 public:
  /// A 1-element tensor holding 0.
  DenseTensor();
  /// Zero-filled tensor of the given shape.
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor from_matrix(const Matrix& m);
  static DenseTensor filled(Shape shape, double value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t mode) const { return shape_.at(mode); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t linear) { return data_[linear]; }
  double operator[](std::size_t linear) const { return data_[linear]; }

  double& at(std::span<const std::size_t> index);
  double at(std::span<const std::size_t> index) const;
  double& operator()(std::initializer_list<std::size_t> index) {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }
  double operator()(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  std::size_t linear_index(std::span<const std::size_t> index) const;

  /// Reinterprets the data as a rows x cols column-major matrix.
  Eigen::Map<const Matrix> as_matrix(std::size_t rows, std::size_t cols) const;
  Eigen::Map<Matrix> as_matrix(std::size_t rows, std::size_t cols);

  double norm() const;

  bool operator==(const DenseTensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

DenseTensor reshape(const DenseTensor& t, Shape new_shape);

/// Mode-k unfolding: rows = I_k, columns = remaining modes in column-major
/// order. `mode` is 0-based.
Matrix matricize(const DenseTensor& t, std::size_t mode);
DenseTensor dematricize(const Matrix& m, std::size_t mode, const Shape& shape);

/// t ×_mode m, i.e. dematricize(m * matricize(t, mode)).
DenseTensor mode_product(const DenseTensor& t, const Matrix& m,
                         std::size_t mode);

/// perm[j] is the input axis placed at output axis j.
DenseTensor permute_axes(const DenseTensor& t,
                         std::span<const std::size_t> perm);
std::vector<std::size_t> inverse_permutation(
    std::span<const std::size_t> perm);

enum class StructuralKind {
  kDirectSum,
  kPartialDirectSum,
  kHadamard,
  kKronecker,
  kPartialKronecker,
};

/// Block-diagonal placement; every mode size is the sum of the operands'.
DenseTensor direct_sum(const DenseTensor& a, const DenseTensor& b);
/// Mode sizes multiply; combined index along mode k is i_a * I_b + i_b.
DenseTensor kronecker(const DenseTensor& a, const DenseTensor& b);
DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b);

/// Column concatenation [a | b] of matrices sharing their row count.
Matrix partial_direct_sum(const Matrix& a, const Matrix& b);
/// Row-wise Kronecker: row r is kron(a.row(r), b.row(r)).
Matrix partial_kronecker(const Matrix& a, const Matrix& b);
Matrix direct_sum(const Matrix& a, const Matrix& b);
Matrix kronecker(const Matrix& a, const Matrix& b);

DenseTensor binary_structural(StructuralKind kind, const DenseTensor& a,
                              const DenseTensor& b);
Matrix binary_structural(StructuralKind kind, const Matrix& a,
                         const Matrix& b);

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator*(double s, const DenseTensor& a);

/// ||a - b||_F / ||b||_F, with ||b||_F = 0 mapped to the absolute error.
double relative_error(const DenseTensor& approx, const DenseTensor& exact);

/// Copies the block [0, extent_k) along every mode.
DenseTensor leading_block(const DenseTensor& t, const Shape& extent);

/// Tensor with ones on (i, i, ..., i).
DenseTensor superdiagonal(std::size_t order, std::size_t size);

}  // namespace tnvault
