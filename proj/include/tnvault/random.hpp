#pragma once

#include <cstdint>
#include <random>

#include "tnvault/tensor.hpp"

namespace tnvault {

/// splitmix64 finalizer; used to derive independent per-step seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for sub-stream `index` of stream `stream` under a master seed.
/// Per-step perturbations are drawn from derived seeds so that a step can be
/// replayed on any server without sharing generator state.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index);

namespace streams {
inline constexpr std::uint64_t kPerturbation = 0x70657274;  // "pert"
inline constexpr std::uint64_t kModePermutation = 0x7065726d;
inline constexpr std::uint64_t kNoise = 0x6e6f6973;
inline constexpr std::uint64_t kAdditive = 0x61646476;
inline constexpr std::uint64_t kAssignment = 0x61737367;
inline constexpr std::uint64_t kFragmentId = 0x66726167;
inline constexpr std::uint64_t kSynthetic = 0x73796e74;
}  // namespace streams

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform double in [lo, hi] built from the top 53 bits.
  double uniform(double lo, double hi);
  double normal();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

DenseTensor random_uniform(Shape shape, double lo, double hi, Rng& rng);
DenseTensor random_normal(Shape shape, Rng& rng);
Matrix random_normal_matrix(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace tnvault
