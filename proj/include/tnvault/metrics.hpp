#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tnvault/representation_io.hpp"

namespace tnvault {

inline constexpr std::size_t kDefaultNmiBins = 256;

/// (1/N') sum_n ||x_n - x'_n|| / ||x_n||.
double l2_dissimilarity(const std::vector<DenseTensor>& originals,
                        const std::vector<DenseTensor>& reconstructions);

/// |Pearson rho| between the slices a[..., r, ...] and b[..., r, ...] for
/// each r along `rank_axis` (0-based). A slice with zero variance in either
/// operand gives nullopt.
std::vector<std::optional<double>> pearson_per_rank(const DenseTensor& a,
                                                    const DenseTensor& b,
                                                    std::size_t rank_axis);

/// 2 I(X;Y) / (H(X) + H(Y)), natural log, `bins` equal-width bins per
/// operand over its own [min, max]. Symmetric bit for bit.
double nmi(const DenseTensor& x, const DenseTensor& y,
           std::size_t bins = kDefaultNmiBins);

/// Equal-width bins over [min, max]; the max lands in the last bin and a
/// constant tensor puts everything in bin 0.
std::vector<std::uint64_t> histogram(const DenseTensor& t, std::size_t bins);
/// Bin index of v for `bins` bins over [lo, hi] (hi > lo).
std::size_t bin_index(double v, double lo, double hi, std::size_t bins);

/// Stored parameters / prod(mode sizes).
double compression_ratio(const AnyRepresentation& rep);

/// Per-slice Frobenius norms along the physical mode index of each block
/// (middle axis of chain cores, rows of Tucker factors and HT leaves).
/// Blocks without a physical index (Tucker core, HT transfer tensors) get
/// an empty profile.
struct BlockNormProfile {
  std::vector<double> factors;
  std::vector<bool> zero;        // slice norm was 0; left unnormalized
  DenseTensor normalized;        // every nonzero slice scaled to unit norm
};
std::vector<BlockNormProfile> core_norm_profile(const AnyRepresentation& rep);

struct MetricReport {
  std::string metric;
  std::vector<std::optional<double>> values;  // nullopt = undefined
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> operands;

  nlohmann::json to_json() const;
  /// "metric,index,value" rows; undefined values are written as "nan".
  std::string to_csv() const;
  void write(const std::filesystem::path& dir, const std::string& stem) const;
};

}  // namespace tnvault
