#include "tnvault/random.hpp"

namespace tnvault {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
  return mix64(mix64(mix64(seed) ^ stream) + index);
}

double Rng::uniform(double lo, double hi) {
  const double unit =
      static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0, 1)
  const double v = lo + (hi - lo) * unit;
  return v > hi ? hi : v;
}

double Rng::normal() { return normal_(engine_); }

DenseTensor random_uniform(Shape shape, double lo, double hi, Rng& rng) {
  DenseTensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

DenseTensor random_normal(Shape shape, Rng& rng) {
  DenseTensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal();
  return t;
}

Matrix random_normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal();
  }
  return m;
}

}  // namespace tnvault
