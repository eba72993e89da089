#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tnvault/decomp.hpp"

namespace tnvault {

/// Stand-in for a face image: every channel is U diag(k^-decay) V_c^T with
/// Gaussian U, V_c (U shared across channels), rescaled to [0, 255].
DenseTensor synthetic_image(std::size_t height, std::size_t width,
                            std::size_t channels, double decay,
                            std::uint64_t seed);

struct BenchOptions {
  std::uint64_t seed = 0;
  double delta = 0.05;
  std::filesystem::path out;   // empty = no files
  std::size_t image_size = 600;
  std::size_t repeats = 3;     // timing: best of
};

struct SuperdiagonalReport {
  std::vector<std::size_t> ranks_baseline, ranks_randomized;
  std::vector<std::size_t> ranks_padded_baseline, ranks_padded_randomized;
  double error_baseline = 0, error_randomized = 0;
  /// Leading block of the padded reconstruction against the original.
  double error_padded_baseline = 0, error_padded_randomized = 0;
  bool exact = false;           // all four errors <= 1e-10
  bool padded_ranks_not_lower = false;
  double seconds = 0;

  nlohmann::json to_json() const;
};

struct TimingRow {
  std::string algorithm;  // HOSVD, rTD, TT-SVD, rTT-SVD, TR-SVD, rTR-SVD
  Format format = Format::kTT;
  bool randomized = false;
  std::vector<std::size_t> ranks;
  double decompose_seconds = 0, reconstruct_seconds = 0;
  double compression_ratio = 0, relative_error = 0;
};

struct TimingReport {
  std::vector<TimingRow> rows;
  /// Per format: randomized / baseline decomposition time.
  std::vector<std::pair<Format, double>> ratios;
  double max_decompose_seconds = 0;
  bool ratios_ok = false;   // every ratio <= 2.5
  bool under_budget = false; // every decomposition < 5 s

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

struct DistortionRow {
  std::string algorithm;
  std::size_t parameter = 0;  // rank knob
  double compression_ratio = 0;
  double l2_dissimilarity = 0;
};

SuperdiagonalReport bench_superdiagonal(const BenchOptions& opt);
TimingReport bench_timing(const BenchOptions& opt);
std::vector<DistortionRow> bench_distortion_curve(const BenchOptions& opt);
std::string distortion_csv(const std::vector<DistortionRow>& rows);

inline constexpr double kTimingRatioLimit = 2.5;
inline constexpr double kDecomposeBudgetSeconds = 5.0;

/// Runs a suite by name (superdiagonal, timing, distortion-curve), writes
/// its files under opt.out and returns the JSON summary. Throws
/// UnknownSuite.
nlohmann::json run_bench_suite(const std::string& suite, const BenchOptions& opt);

}  // namespace tnvault
