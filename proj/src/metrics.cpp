#include "tnvault/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tnvault/errors.hpp"

namespace tnvault {

using nlohmann::json;

namespace {

// Column-major layout around one axis: index = i + inner * (r + dim * o).
struct AxisLayout {
  std::size_t inner = 1, dim = 1, outer = 1;

  AxisLayout(const Shape& shape, std::size_t axis) {
    for (std::size_t k = 0; k < axis; ++k) inner *= shape[k];
    dim = shape[axis];
    for (std::size_t k = axis + 1; k < shape.size(); ++k) outer *= shape[k];
  }
  std::size_t at(std::size_t i, std::size_t r, std::size_t o) const {
    return i + inner * (r + dim * o);
  }
};

std::vector<double> slice(std::span<const double> data, const AxisLayout& l,
                          std::size_t r) {
  std::vector<double> out;
  out.reserve(l.inner * l.outer);
  for (std::size_t o = 0; o < l.outer; ++o)
    for (std::size_t i = 0; i < l.inner; ++i) out.push_back(data[l.at(i, r, o)]);
  return out;
}

std::pair<double, double> min_max(const DenseTensor& t) {
  const auto [lo, hi] = std::minmax_element(t.data().begin(), t.data().end());
  return {*lo, *hi};
}

// Entropy of a multiset of counts. Sorting first makes the sum independent
// of the order the cells were visited in.
double entropy(std::vector<std::uint64_t> counts, double total) {
  std::sort(counts.begin(), counts.end());
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

std::vector<std::size_t> bin_all(const DenseTensor& t, std::size_t bins,
                                 const char* which) {
  const auto [lo, hi] = min_max(t);
  require(hi > lo, ErrorCode::kDegenerateRange,
          std::string(which) + " is constant (" + std::to_string(lo) + ")");
  std::vector<std::size_t> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    out[i] = bin_index(t.data()[i], lo, hi, bins);
  return out;
}

std::string format_value(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

double l2_dissimilarity(const std::vector<DenseTensor>& originals,
                        const std::vector<DenseTensor>& reconstructions) {
  require(originals.size() == reconstructions.size(), ErrorCode::kShapeMismatch,
          std::to_string(originals.size()) + " originals but " +
              std::to_string(reconstructions.size()) + " reconstructions");
  require(!originals.empty(), ErrorCode::kInvalidArgument, "no tensors given");
  double sum = 0.0;
  for (std::size_t n = 0; n < originals.size(); ++n) {
    const DenseTensor& x = originals[n];
    const DenseTensor& y = reconstructions[n];
    require(x.shape() == y.shape(), ErrorCode::kShapeMismatch,
            "pair " + std::to_string(n) + ": " + shape_string(x.shape()) +
                " vs " + shape_string(y.shape()));
    const double nx = x.norm();
    require(nx > 0.0, ErrorCode::kZeroNormOriginal,
            "original " + std::to_string(n) + " has zero norm");
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = x.data()[i] - y.data()[i];
      d += e * e;
    }
    sum += std::sqrt(d) / nx;
  }
  return sum / static_cast<double>(originals.size());
}

std::vector<std::optional<double>> pearson_per_rank(const DenseTensor& a,
                                                    const DenseTensor& b,
                                                    std::size_t rank_axis) {
  require(a.shape() == b.shape(), ErrorCode::kShapeMismatch,
          shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  require(rank_axis < a.order(), ErrorCode::kIndexOutOfRange,
          "axis " + std::to_string(rank_axis) + " of an order-" +
              std::to_string(a.order()) + " tensor");
  const AxisLayout l(a.shape(), rank_axis);
  std::vector<std::optional<double>> out;
  for (std::size_t r = 0; r < l.dim; ++r) {
    const auto x = slice(a.data(), l, r);
    const auto y = slice(b.data(), l, r);
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(std::min(1.0, std::abs(sxy / std::sqrt(sxx * syy))));
    }
  }
  return out;
}

std::size_t bin_index(double v, double lo, double hi, std::size_t bins) {
  const double f = (v - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(f > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(f), bins - 1);
}

double nmi(const DenseTensor& x, const DenseTensor& y, std::size_t bins) {
  require(x.size() == y.size(), ErrorCode::kShapeMismatch,
          std::to_string(x.size()) + " vs " + std::to_string(y.size()) +
              " elements");
  require(bins >= 2, ErrorCode::kInvalidArgument, "nmi needs at least 2 bins");
  const auto bx = bin_all(x, bins, "x");
  const auto by = bin_all(y, bins, "y");
  const double n = static_cast<double>(x.size());

  std::vector<std::uint64_t> cx(bins, 0), cy(bins, 0);
  std::vector<std::uint64_t> codes(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++cx[bx[i]];
    ++cy[by[i]];
    // Swapping x and y relabels the cells but keeps the multiset of counts.
    codes[i] = static_cast<std::uint64_t>(bx[i]) * bins + by[i];
  }
  std::sort(codes.begin(), codes.end());
  std::vector<std::uint64_t> joint;
  for (std::size_t i = 0; i < codes.size();) {
    std::size_t j = i;
    while (j < codes.size() && codes[j] == codes[i]) ++j;
    joint.push_back(j - i);
    i = j;
  }
  const double hx = entropy(cx, n);
  const double hy = entropy(cy, n);
  const double hxy = entropy(joint, n);
  const double hsum = hx + hy;
  const double mi = hsum - hxy;
  return std::clamp(2.0 * mi / hsum, 0.0, 1.0);
}

std::vector<std::uint64_t> histogram(const DenseTensor& t, std::size_t bins) {
  require(bins >= 1, ErrorCode::kInvalidArgument, "histogram needs bins >= 1");
  std::vector<std::uint64_t> counts(bins, 0);
  const auto [lo, hi] = min_max(t);
  if (hi == lo) {
    counts[0] = t.size();
    return counts;
  }
  for (double v : t.data()) ++counts[bin_index(v, lo, hi, bins)];
  return counts;
}

double compression_ratio(const AnyRepresentation& rep) {
  const RepresentationStructure s = structure_of(rep);
  return static_cast<double>(parameter_count(rep)) /
         static_cast<double>(shape_product(s.mode_sizes));
}

std::vector<BlockNormProfile> core_norm_profile(const AnyRepresentation& rep) {
  const bool chain = std::holds_alternative<TTRepresentation>(rep) ||
                     std::holds_alternative<TRRepresentation>(rep);
  std::vector<BlockNormProfile> out;
  for (const DenseTensor& block : blocks_of(rep)) {
    BlockNormProfile p;
    std::size_t axis = 0;
    if (chain && block.order() == 3) {
      axis = 1;
    } else if (!chain && block.order() == 2) {
      axis = 0;
    } else {
      out.push_back(std::move(p));
      continue;
    }
    const AxisLayout l(block.shape(), axis);
    p.normalized = block;
    for (std::size_t r = 0; r < l.dim; ++r) {
      double ss = 0.0;
      for (double v : slice(block.data(), l, r)) ss += v * v;
      const double f = std::sqrt(ss);
      p.factors.push_back(f);
      p.zero.push_back(f == 0.0);
      if (f == 0.0) continue;
      for (std::size_t o = 0; o < l.outer; ++o)
        for (std::size_t i = 0; i < l.inner; ++i)
          p.normalized.data()[l.at(i, r, o)] /= f;
    }
    out.push_back(std::move(p));
  }
  return out;
}

json MetricReport::to_json() const {
  json vals = json::array();
  for (const auto& v : values) {
    if (v) {
      vals.push_back(*v);
    } else {
      vals.push_back(nullptr);
    }
  }
  return json{{"metric", metric},
              {"values", vals},
              {"parameters", parameters},
              {"operands", operands}};
}

std::string MetricReport::to_csv() const {
  std::ostringstream s;
  s << "metric,index,value\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    s << metric << ',' << i << ','
      << (values[i] ? format_value(*values[i]) : std::string("nan")) << '\n';
  return s.str();
}

void MetricReport::write(const std::filesystem::path& dir,
                         const std::string& stem) const {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / (stem + ".csv"));
  std::ofstream js(dir / (stem + ".json"));
  require(csv && js, ErrorCode::kIoError, "cannot write into " + dir.string());
  csv << to_csv();
  js << to_json().dump(2) << '\n';
}

}  // namespace tnvault
