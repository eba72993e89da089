// tnvault command line: decompose, reconstruct, metrics, bench and a
// dispersed rounding run.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tnvault/bench.hpp"
#include "tnvault/cluster.hpp"
#include "tnvault/errors.hpp"
#include "tnvault/metrics.hpp"
#include "tnvault/representation_io.hpp"
#include "tnvault/sharing.hpp"
#include "tnvault/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tnvault;

namespace {

// Exit codes: 0 ok, 1 unexpected failure, 2 usage error, 10 + ErrorCode for
// library errors (MissingFragment = 21, HashMismatch = 22, ...).
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitErrorBase = 10;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void usage_check(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DenseTensor load_operand(const fs::path& p) {
  if (p.extension() == ".tnc") return read_tnc(p).block;
  return read_tensor(p);
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::kIoError, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// ---- decompose

struct DecomposeArgs {
  std::string input;
  std::string format = "tt";
  std::optional<double> eps;
  std::vector<std::size_t> ranks;
  std::string tree;
  double delta = 0.05;
  std::uint64_t seed = 0;
  std::size_t servers = 3;
  bool permute_modes = false;
  bool random_assignment = false;
  bool baseline = false;
  bool no_balance = false;
};

int cmd_decompose(const DecomposeArgs& a, const fs::path& out) {
  const Format format = parse_format(a.format);
  const bool chain = format == Format::kTT || format == Format::kTR;
  if (chain) {
    usage_check(a.eps.has_value(), "--eps is required for " + a.format);
    usage_check(a.ranks.empty(), "--ranks does not apply to " + a.format + "; use --eps");
  } else {
    usage_check(a.eps.has_value() != !a.ranks.empty(),
                "give exactly one of --eps or --ranks for " + a.format);
  }
  if (a.eps) usage_check(*a.eps > 0.0 && *a.eps < 1.0, "--eps must lie in (0,1)");
  usage_check(a.delta > 0.0 && a.delta <= 1.0, "--delta must lie in (0,1]");

  DenseTensor t = read_tensor(a.input);
  std::vector<std::size_t> axis_order;
  // Images are H x W x C; H x C x W balances the chain and Tucker shapes.
  if (is_image_path(a.input) && t.order() == 3 && !a.no_balance) {
    axis_order = {0, 2, 1};
    t = permute_axes(t, axis_order);
  }

  ShareOptions so;
  so.format = format;
  so.eps = a.eps.value_or(0.1);
  so.ranks = a.ranks;
  so.tree = a.tree;
  so.delta = a.delta;
  so.randomize = !a.baseline;
  so.n_servers = a.servers;
  so.permute_modes = a.permute_modes;
  so.random_assignment = a.random_assignment;
  so.seed = a.seed;
  const auto t0 = std::chrono::steady_clock::now();
  SharePackage pkg = generate_shares(t, so);
  const double decompose_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  pkg.manifest.axis_order = axis_order;

  const AnyRepresentation rep = representation_from_shares(pkg.manifest, pkg.shares);
  const auto t1 = std::chrono::steady_clock::now();
  const DenseTensor back =
      reconstruct(pkg.manifest.permutation_seeds.empty()
                      ? rep
                      : unpermute_modes(rep, pkg.manifest.permutation_seeds));
  const double reconstruct_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();

  fs::create_directories(out);
  write_tnc(out, rep);
  write_share_package(out, pkg.manifest, pkg.shares);
  json report{{"format", format_name(format)},
              {"input", a.input},
              {"shape", t.shape()},
              {"axis_order", axis_order},
              {"ranks", pkg.report.ranks},
              {"randomized", !a.baseline},
              {"delta", a.delta},
              {"seed", a.seed},
              {"n_servers", a.servers},
              {"decompose_seconds", decompose_s},
              {"reconstruct_seconds", reconstruct_s},
              {"relative_error", relative_error(back, t)},
              {"compression_ratio", compression_ratio(rep)},
              {"perturbation_steps", pkg.report.perturbations.size()},
              {"ring_split_fallback", pkg.report.ring_split_fallback}};
  if (a.eps) report["eps"] = *a.eps;
  write_json(out / "report.json", report);
  std::cout << report.dump(2) << '\n';
  return 0;
}

// ---- reconstruct

int cmd_reconstruct(const std::string& manifest_path, std::string fragments,
                    const std::string& verify, const fs::path& out) {
  const ShareManifest m = read_manifest(manifest_path);
  if (fragments.empty())
    fragments = (fs::path(manifest_path).parent_path() / "fragments").string();
  const ShareSet shares = read_fragments(m, fragments);
  const DenseTensor t = reconstruct_from_shares(m, shares);
  fs::create_directories(out);
  write_dt(out / "reconstructed.dt", t);
  json report{{"output", (out / "reconstructed.dt").string()}, {"shape", t.shape()}};
  if (!verify.empty()) {
    const DenseTensor original = read_tensor(verify);
    report["relative_error"] = relative_error(t, original);
  }
  write_json(out / "reconstruct.json", report);
  std::cout << report.dump(2) << '\n';
  return 0;
}

// ---- metrics

struct MetricArgs {
  std::string kind;
  std::vector<std::string> operands;
  std::size_t bins = kDefaultNmiBins;
  std::optional<std::size_t> axis;  // 1-based
  std::string originals, recons;
};

int cmd_metrics(const MetricArgs& a, const fs::path& out) {
  MetricReport r;
  r.metric = a.kind;
  r.operands = a.operands;
  auto need = [&](std::size_t n) {
    usage_check(a.operands.size() == n, a.kind + " takes " + std::to_string(n) +
                                            " operand(s)");
  };
  if (a.kind == "nmi") {
    need(2);
    usage_check(a.bins >= 2, "--bins must be at least 2");
    r.values = {nmi(load_operand(a.operands[0]), load_operand(a.operands[1]), a.bins)};
    r.parameters["bins"] = a.bins;
  } else if (a.kind == "pearson") {
    need(2);
    const DenseTensor x = load_operand(a.operands[0]);
    const DenseTensor y = load_operand(a.operands[1]);
    const std::size_t axis = a.axis.value_or(x.order());
    usage_check(axis >= 1 && axis <= x.order(), "--axis counts from 1 to the order");
    r.values = pearson_per_rank(x, y, axis - 1);
    r.parameters["axis"] = axis;
  } else if (a.kind == "l2") {
    std::vector<DenseTensor> xs, ys;
    if (!a.originals.empty() || !a.recons.empty()) {
      usage_check(!a.originals.empty() && !a.recons.empty() && a.operands.empty(),
                  "l2 takes --originals and --recons directories");
      for (const auto& p : sorted_files(a.originals)) {
        xs.push_back(load_operand(p));
        ys.push_back(load_operand(fs::path(a.recons) / p.filename()));
      }
      r.operands = {a.originals, a.recons};
    } else {
      need(2);
      xs.push_back(load_operand(a.operands[0]));
      ys.push_back(load_operand(a.operands[1]));
    }
    r.values = {l2_dissimilarity(xs, ys)};
    r.parameters["pairs"] = xs.size();
  } else if (a.kind == "histogram") {
    need(1);
    usage_check(a.bins >= 1, "--bins must be at least 1");
    const auto counts = histogram(load_operand(a.operands[0]), a.bins);
    for (auto c : counts) r.values.emplace_back(static_cast<double>(c));
    r.parameters["bins"] = a.bins;
  } else if (a.kind == "compression") {
    need(1);
    r.values = {compression_ratio(read_tnc_dir(a.operands[0]))};
  } else if (a.kind == "profile") {
    need(1);
    json counts = json::array();
    for (const auto& p : core_norm_profile(read_tnc_dir(a.operands[0]))) {
      for (double f : p.factors) r.values.emplace_back(f);
      counts.push_back(p.factors.size());
    }
    r.parameters["slices_per_block"] = counts;
  } else {
    throw UsageError("unknown metric " + a.kind +
                     " (nmi, pearson, l2, histogram, compression, profile)");
  }
  r.write(out, a.kind);
  std::cout << r.to_json().dump(2) << '\n';
  return 0;
}

// ---- bench

int cmd_bench(const std::string& suite, std::uint64_t seed, std::size_t size,
              const fs::path& out) {
  BenchOptions o;
  o.seed = seed;
  o.out = out;
  o.image_size = size;
  const json j = run_bench_suite(suite, o);
  write_json(out / (suite + ".json"), j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

// ---- dispersed rounding

int cmd_dispersed_round(const std::string& manifest_path, std::string fragments,
                        double eps, double delta, std::uint64_t seed,
                        bool baseline, const std::string& transport,
                        const std::string& cluster_config, const fs::path& out) {
  usage_check(eps > 0.0 && eps < 1.0, "--eps must lie in (0,1)");
  usage_check(transport == "memory" || transport == "sockets",
              "--transport is memory or sockets");
  const ShareManifest m = read_manifest(manifest_path);
  if (fragments.empty())
    fragments = (fs::path(manifest_path).parent_path() / "fragments").string();
  const ShareSet shares = read_fragments(m, fragments);
  const ClusterConfig cfg =
      cluster_config.empty() ? ClusterConfig{} : load_cluster_config(cluster_config);
  auto cluster = spawn_cluster(
      m.n_servers,
      transport == "memory" ? TransportKind::kInMemory : TransportKind::kLocalSockets,
      cfg);
  cluster->distribute(m, shares);
  const ShareManifest rounded =
      dispersed_tt_round(*cluster, m, eps, !baseline, delta, seed);
  const ShareSet result = cluster->collect(rounded);
  cluster->shutdown();
  write_share_package(out, rounded, result);
  cluster->write_log(out / "protocol.log.jsonl");
  json report{{"ranks", rounded.structure.ranks},
              {"messages", cluster->log().size()},
              {"manifest", (out / "share.manifest.json").string()}};
  std::cout << report.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-network secret sharing toolkit"};
  app.set_config("--config", "", "key=value file overriding defaults");
  app.require_subcommand(1);
  app.fallthrough();  // lets -o/--config follow the subcommand
  std::string out = "out";
  app.add_option("-o,--out", out, "output directory")->capture_default_str();

  DecomposeArgs dec;
  auto* sc_dec = app.add_subcommand("decompose", "decompose a tensor into shares");
  sc_dec->add_option("input", dec.input, ".dt, .csv, .pgm or .ppm")->required();
  sc_dec->add_option("--format", dec.format, "tt, tr, tucker or ht")->capture_default_str();
  sc_dec->add_option("--eps", dec.eps, "relative tolerance (TT/TR)");
  sc_dec->add_option("--ranks", dec.ranks, "Tucker ranks or HT rank map")->delimiter(',');
  sc_dec->add_option("--tree", dec.tree, "HT dimension tree, e.g. ((1,2),3)");
  sc_dec->add_option("--delta", dec.delta, "perturbation lower bound")->capture_default_str();
  sc_dec->add_option("--seed", dec.seed, "master seed")->envname("TNVAULT_SEED");
  sc_dec->add_option("--servers", dec.servers, "number of servers")->capture_default_str();
  sc_dec->add_flag("--permute-modes", dec.permute_modes, "permute mode indices");
  sc_dec->add_flag("--random-assignment", dec.random_assignment,
                   "shuffle the core-to-server assignment");
  sc_dec->add_flag("--baseline", dec.baseline, "classical (non-randomized) decomposition");
  sc_dec->add_flag("--no-balance", dec.no_balance, "keep image axes as H x W x C");

  std::string manifest, fragments, verify;
  auto* sc_rec = app.add_subcommand("reconstruct", "rebuild a tensor from shares");
  sc_rec->add_option("manifest", manifest, "share.manifest.json")->required();
  sc_rec->add_option("--fragments", fragments, "fragment directory");
  sc_rec->add_option("--verify", verify, "original tensor; prints the relative error");

  MetricArgs met;
  auto* sc_met = app.add_subcommand("metrics", "privacy and fidelity metrics");
  sc_met->add_option("kind", met.kind,
                     "nmi, pearson, l2, histogram, compression or profile")->required();
  sc_met->add_option("operands", met.operands, "tensors, .tnc blocks or .tnc dirs");
  sc_met->add_option("--bins", met.bins, "histogram bins")->capture_default_str();
  sc_met->add_option("--axis", met.axis, "pearson rank axis, 1-based (default: last)");
  sc_met->add_option("--originals", met.originals, "l2: directory of originals");
  sc_met->add_option("--recons", met.recons, "l2: directory of reconstructions");

  std::string suite;
  std::uint64_t bench_seed = 0;
  std::size_t bench_size = 600;
  auto* sc_bench = app.add_subcommand("bench", "benchmark suites");
  sc_bench->add_option("suite", suite, "superdiagonal, timing or distortion-curve")->required();
  sc_bench->add_option("--seed", bench_seed, "master seed")->envname("TNVAULT_SEED");
  sc_bench->add_option("--size", bench_size, "timing image side")->capture_default_str();

  std::string dr_manifest, dr_fragments, transport = "memory", cluster_config;
  double dr_eps = 0.1, dr_delta = 0.05;
  std::uint64_t dr_seed = 0;
  bool dr_baseline = false;
  auto* sc_dr = app.add_subcommand("dispersed-round",
                                   "round TT shares across simulated servers");
  sc_dr->add_option("manifest", dr_manifest, "share.manifest.json")->required();
  sc_dr->add_option("--fragments", dr_fragments, "fragment directory");
  sc_dr->add_option("--eps", dr_eps, "rounding tolerance")->capture_default_str();
  sc_dr->add_option("--delta", dr_delta, "perturbation lower bound")->capture_default_str();
  sc_dr->add_option("--seed", dr_seed, "master seed")->envname("TNVAULT_SEED");
  sc_dr->add_flag("--baseline", dr_baseline, "classical rounding");
  sc_dr->add_option("--transport", transport, "memory or sockets")->capture_default_str();
  sc_dr->add_option("--cluster-config", cluster_config, "host/base_port file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sc_dec) return cmd_decompose(dec, out);
    if (*sc_rec) return cmd_reconstruct(manifest, fragments, verify, out);
    if (*sc_met) return cmd_metrics(met, out);
    if (*sc_bench) return cmd_bench(suite, bench_seed, bench_size, out);
    if (*sc_dr)
      return cmd_dispersed_round(dr_manifest, dr_fragments, dr_eps, dr_delta, dr_seed,
                                 dr_baseline, transport, cluster_config, out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitErrorBase + static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
