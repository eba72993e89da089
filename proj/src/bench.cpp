#include "tnvault/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tnvault/errors.hpp"
#include "tnvault/metrics.hpp"
#include "tnvault/random.hpp"
#include "tnvault/representation_io.hpp"

namespace tnvault {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

std::string join(const std::vector<std::size_t>& v, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIoError,
          "cannot write " + path.string());
  out << text;
}

// Images are H x W x C; the chain formats run on H x C x W.
constexpr std::size_t kBalanced[3] = {0, 2, 1};

DenseTensor balanced(const DenseTensor& image) {
  return permute_axes(image, kBalanced);
}

DecompositionOptions options(bool randomize, double delta, std::uint64_t seed) {
  DecompositionOptions o;
  o.randomize = randomize;
  o.delta = delta;
  o.seed = seed;
  return o;
}

// Tight tolerance so that only the rank caps truncate.
constexpr double kCapOnlyEps = 1e-12;

struct Variant {
  std::string name;
  Format format;
  bool randomized;
};

const std::vector<Variant>& variants() {
  static const std::vector<Variant> v = {
      {"HOSVD", Format::kTucker, false}, {"rTD", Format::kTucker, true},
      {"TT-SVD", Format::kTT, false},    {"rTT-SVD", Format::kTT, true},
      {"TR-SVD", Format::kTR, false},    {"rTR-SVD", Format::kTR, true},
  };
  return v;
}

// Decomposes the balanced H x C x W tensor. `caps` are the Tucker ranks or
// the TT/TR per-step caps.
AnyRepresentation decompose_variant(const Variant& v, const DenseTensor& t,
                                    const std::vector<std::size_t>& caps,
                                    const DecompositionOptions& base) {
  DecompositionOptions o = base;
  o.randomize = v.randomized;
  switch (v.format) {
    case Format::kTucker:
      return rtd(t, caps, o).rep;
    case Format::kTT:
      o.max_ranks = caps;
      return tt_svd(t, kCapOnlyEps, o).rep;
    case Format::kTR:
      o.max_ranks = caps;
      return tr_svd(t, kCapOnlyEps, o).rep;
    case Format::kHT:
      break;
  }
  fail(ErrorCode::kInvalidArgument, "no bench variant for HT");
}

std::string core_csv(const std::vector<DenseTensor>& cores) {
  std::ostringstream s;
  s.precision(17);
  s << "core,a,i,b,value\n";
  for (std::size_t k = 0; k < cores.size(); ++k) {
    const DenseTensor& c = cores[k];
    for (std::size_t b = 0; b < c.dim(2); ++b)
      for (std::size_t i = 0; i < c.dim(1); ++i)
        for (std::size_t a = 0; a < c.dim(0); ++a)
          s << k << ',' << a << ',' << i << ',' << b << ',' << c({a, i, b})
            << '\n';
  }
  return s.str();
}

std::string histogram_csv(const TTRepresentation& tt, std::size_t bins) {
  std::ostringstream s;
  s << "core,bin,count\n";
  const auto profile = core_norm_profile(AnyRepresentation(tt));
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const auto counts = histogram(profile[k].normalized, bins);
    for (std::size_t b = 0; b < counts.size(); ++b)
      s << k << ',' << b << ',' << counts[b] << '\n';
  }
  return s.str();
}

}  // namespace

DenseTensor synthetic_image(std::size_t height, std::size_t width,
                            std::size_t channels, double decay,
                            std::uint64_t seed) {
  require(height > 0 && width > 0 && channels > 0, ErrorCode::kShapeMismatch,
          "empty image");
  const std::size_t r = std::min(height, width);
  Rng rng(derive_seed(seed, streams::kSynthetic, 0));
  const Matrix u = random_normal_matrix(height, r, rng);
  Eigen::VectorXd s(static_cast<Eigen::Index>(r));
  for (std::size_t k = 0; k < r; ++k)
    s(static_cast<Eigen::Index>(k)) = std::pow(static_cast<double>(k + 1), -decay);
  const Matrix us = u * s.asDiagonal();
  DenseTensor img({height, width, channels});
  for (std::size_t c = 0; c < channels; ++c) {
    Rng rc(derive_seed(seed, streams::kSynthetic, c + 1));
    const Matrix v = random_normal_matrix(width, r, rc);
    const Matrix plane = us * v.transpose();
    std::copy(plane.data(), plane.data() + plane.size(),
              img.data().begin() + static_cast<std::ptrdiff_t>(c * height * width));
  }
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const double l = *lo, range = *hi - *lo;
  for (double& x : img.data()) x = range > 0 ? 255.0 * (x - l) / range : 0.0;
  return img;
}

// ---- superdiagonal

json SuperdiagonalReport::to_json() const {
  return json{{"ranks_baseline", ranks_baseline},
              {"ranks_randomized", ranks_randomized},
              {"ranks_padded_baseline", ranks_padded_baseline},
              {"ranks_padded_randomized", ranks_padded_randomized},
              {"error_baseline", error_baseline},
              {"error_randomized", error_randomized},
              {"error_padded_baseline", error_padded_baseline},
              {"error_padded_randomized", error_padded_randomized},
              {"exact", exact},
              {"padded_ranks_not_lower", padded_ranks_not_lower},
              {"seconds", seconds}};
}

SuperdiagonalReport bench_superdiagonal(const BenchOptions& opt) {
  const auto t0 = Clock::now();
  const Shape extent{10, 10, 10};
  const DenseTensor a = superdiagonal(3, 10);
  const DenseTensor padded = pad_noise(a, {2, 2, 2}, 1.0, opt.seed);

  SuperdiagonalReport r;
  const auto base = tt_svd(a, kCapOnlyEps, options(false, opt.delta, opt.seed));
  const auto rnd = tt_svd(a, kCapOnlyEps, options(true, opt.delta, opt.seed));
  const auto pbase = tt_svd(padded, kCapOnlyEps, options(false, opt.delta, opt.seed));
  const auto prnd = tt_svd(padded, kCapOnlyEps, options(true, opt.delta, opt.seed));
  r.ranks_baseline = base.rep.ranks();
  r.ranks_randomized = rnd.rep.ranks();
  r.ranks_padded_baseline = pbase.rep.ranks();
  r.ranks_padded_randomized = prnd.rep.ranks();
  r.error_baseline = relative_error(reconstruct(base.rep), a);
  r.error_randomized = relative_error(reconstruct(rnd.rep), a);
  r.error_padded_baseline =
      relative_error(leading_block(reconstruct(pbase.rep), extent), a);
  r.error_padded_randomized =
      relative_error(leading_block(reconstruct(prnd.rep), extent), a);
  r.exact = std::max({r.error_baseline, r.error_randomized,
                      r.error_padded_baseline, r.error_padded_randomized}) <= 1e-10;
  r.padded_ranks_not_lower = true;
  for (std::size_t k = 0; k < r.ranks_baseline.size(); ++k) {
    r.padded_ranks_not_lower &=
        r.ranks_padded_baseline[k] >= r.ranks_baseline[k] &&
        r.ranks_padded_randomized[k] >= r.ranks_randomized[k];
  }
  r.seconds = seconds_since(t0);

  if (!opt.out.empty()) {
    const fs::path dir = opt.out / "superdiagonal";
    write_text(dir / "tt_cores.csv", core_csv(base.rep.cores));
    write_text(dir / "rtt_cores.csv", core_csv(rnd.rep.cores));
    write_text(dir / "tt_padded_cores.csv", core_csv(pbase.rep.cores));
    write_text(dir / "rtt_padded_cores.csv", core_csv(prnd.rep.cores));
    write_text(dir / "tt_histograms.csv", histogram_csv(base.rep, 20));
    write_text(dir / "rtt_histograms.csv", histogram_csv(rnd.rep, 20));
    write_text(dir / "tt_padded_histograms.csv", histogram_csv(pbase.rep, 20));
    write_text(dir / "rtt_padded_histograms.csv", histogram_csv(prnd.rep, 20));
  }
  return r;
}

// ---- timing

json TimingReport::to_json() const {
  json rows_j = json::array();
  for (const TimingRow& row : rows)
    rows_j.push_back({{"algorithm", row.algorithm},
                      {"format", format_name(row.format)},
                      {"randomized", row.randomized},
                      {"ranks", row.ranks},
                      {"decompose_seconds", row.decompose_seconds},
                      {"reconstruct_seconds", row.reconstruct_seconds},
                      {"compression_ratio", row.compression_ratio},
                      {"relative_error", row.relative_error}});
  json ratios_j = json::object();
  for (const auto& [f, x] : ratios) ratios_j[std::string(format_name(f))] = x;
  return json{{"rows", rows_j},
              {"ratios", ratios_j},
              {"max_decompose_seconds", max_decompose_seconds},
              {"ratio_limit", kTimingRatioLimit},
              {"ratios_ok", ratios_ok},
              {"under_budget", under_budget}};
}

std::string TimingReport::to_csv() const {
  std::ostringstream s;
  s << "algorithm,ranks,decompose_s,reconstruct_s,compression_ratio,"
       "relative_error\n";
  for (const TimingRow& r : rows)
    s << r.algorithm << ',' << join(r.ranks) << ',' << num(r.decompose_seconds)
      << ',' << num(r.reconstruct_seconds) << ',' << num(r.compression_ratio)
      << ',' << num(r.relative_error) << '\n';
  return s.str();
}

TimingReport bench_timing(const BenchOptions& opt) {
  const std::size_t n = opt.image_size;
  const DenseTensor image = synthetic_image(n, n, 3, 1.0, opt.seed);
  const DenseTensor t = balanced(image);
  // Ranks at compression ratio ~0.725 for 600 x 3 x 600; scaled for other
  // sizes.
  const auto scaled = [&](std::size_t r) {
    return std::max<std::size_t>(1, r * n / 600);
  };
  const std::size_t ring = scaled(20);
  TimingReport rep;
  rep.under_budget = true;
  std::vector<double> base_time(4, 0.0);
  for (const Variant& v : variants()) {
    std::vector<std::size_t> caps;
    if (v.format == Format::kTucker) caps = {scaled(350), 3, scaled(350)};
    if (v.format == Format::kTT) caps = {scaled(350), scaled(350)};
    if (v.format == Format::kTR) caps = {ring * ring, scaled(45)};
    TimingRow row;
    row.algorithm = v.name;
    row.format = v.format;
    row.randomized = v.randomized;
    row.decompose_seconds = 1e300;
    row.reconstruct_seconds = 1e300;
    AnyRepresentation result;
    for (std::size_t rep_i = 0; rep_i < std::max<std::size_t>(1, opt.repeats);
         ++rep_i) {
      auto t0 = Clock::now();
      result = decompose_variant(v, t, caps, options(true, opt.delta, opt.seed));
      row.decompose_seconds = std::min(row.decompose_seconds, seconds_since(t0));
      t0 = Clock::now();
      const DenseTensor back = reconstruct(result);
      row.reconstruct_seconds = std::min(row.reconstruct_seconds, seconds_since(t0));
      row.relative_error = relative_error(back, t);
    }
    row.ranks = structure_of(result).ranks;
    row.compression_ratio = compression_ratio(result);
    rep.max_decompose_seconds = std::max(rep.max_decompose_seconds, row.decompose_seconds);
    rep.under_budget &= row.decompose_seconds < kDecomposeBudgetSeconds;
    const auto f = static_cast<std::size_t>(v.format);
    if (!v.randomized) {
      base_time[f] = row.decompose_seconds;
    } else {
      rep.ratios.emplace_back(v.format, row.decompose_seconds / base_time[f]);
    }
    rep.rows.push_back(std::move(row));
  }
  rep.ratios_ok = std::all_of(rep.ratios.begin(), rep.ratios.end(),
                              [](const auto& p) { return p.second <= kTimingRatioLimit; });
  if (!opt.out.empty()) {
    write_text(opt.out / "timing" / "timing.csv", rep.to_csv());
    write_text(opt.out / "timing" / "timing.json", rep.to_json().dump(2) + "\n");
  }
  return rep;
}

// ---- distortion curve

std::string distortion_csv(const std::vector<DistortionRow>& rows) {
  std::ostringstream s;
  s << "algorithm,parameter,compression_ratio,l2_dissimilarity\n";
  s.precision(12);
  for (const DistortionRow& r : rows)
    s << r.algorithm << ',' << r.parameter << ',' << r.compression_ratio << ','
      << r.l2_dissimilarity << '\n';
  return s.str();
}

std::vector<DistortionRow> bench_distortion_curve(const BenchOptions& opt) {
  constexpr std::size_t kImages = 4, kSize = 40;
  std::vector<DenseTensor> images;
  for (std::size_t k = 0; k < kImages; ++k)
    images.push_back(balanced(synthetic_image(
        kSize, kSize, 3, 1.0, derive_seed(opt.seed, streams::kSynthetic, 100 + k))));
  const std::vector<std::size_t> knobs = {2, 4, 6, 8, 12, 16, 20, 24, 32, 40};
  std::vector<DistortionRow> rows;
  for (const Variant& v : variants()) {
    for (std::size_t p : knobs) {
      std::vector<std::size_t> caps;
      if (v.format == Format::kTucker) caps = {p, 3, p};
      if (v.format == Format::kTT) caps = {p, p};
      if (v.format == Format::kTR) caps = {p, p};
      std::vector<DenseTensor> recon;
      double cr = 0.0;
      for (std::size_t k = 0; k < kImages; ++k) {
        const AnyRepresentation r = decompose_variant(
            v, images[k], caps,
            options(true, opt.delta, derive_seed(opt.seed, streams::kPerturbation, k)));
        cr += compression_ratio(r);
        recon.push_back(reconstruct(r));
      }
      rows.push_back({v.name, p, cr / kImages, l2_dissimilarity(images, recon)});
    }
  }
  if (!opt.out.empty())
    write_text(opt.out / "distortion-curve" / "distortion.csv", distortion_csv(rows));
  return rows;
}

json run_bench_suite(const std::string& suite, const BenchOptions& opt) {
  if (suite == "superdiagonal") {
    const json j = bench_superdiagonal(opt).to_json();
    if (!opt.out.empty())
      write_text(opt.out / "superdiagonal" / "report.json", j.dump(2) + "\n");
    return j;
  }
  if (suite == "timing") return bench_timing(opt).to_json();
  if (suite == "distortion-curve") {
    const auto rows = bench_distortion_curve(opt);
    json j = json::array();
    for (const auto& r : rows)
      j.push_back({{"algorithm", r.algorithm},
                   {"parameter", r.parameter},
                   {"compression_ratio", r.compression_ratio},
                   {"l2_dissimilarity", r.l2_dissimilarity}});
    return j;
  }
  fail(ErrorCode::kUnknownSuite,
       "unknown suite '" + suite + "' (superdiagonal, timing, distortion-curve)");
}

}  // namespace tnvault
