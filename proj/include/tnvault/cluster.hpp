#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tnvault/ops.hpp"
#include "tnvault/sharing.hpp"
#include "tnvault/wire.hpp"

namespace tnvault {

enum class TransportKind { kInMemory, kLocalSockets };

struct ClusterConfig {
  std::string host = "127.0.0.1";
  /// Link i listens on base_port + i; 0 picks ephemeral ports.
  std::uint16_t base_port = 0;
};

/// key=value lines (host, base_port); '#' starts a comment.
ClusterConfig load_cluster_config(const std::filesystem::path& path);

inline constexpr int kCoordinatorId = -1;

/// One sent frame. The log never holds payloads, only their hash.
struct LogEntry {
  std::uint64_t seq = 0;
  int from = kCoordinatorId;
  int to = kCoordinatorId;
  MessageType type = MessageType::kOpRequest;
  std::uint64_t payload_len = 0;
  std::string label;           // op name or what a blob carries
  std::string payload_sha256;
  double t = 0.0;              // seconds since spawn

  nlohmann::json to_json() const;
};

enum class LocalOpKind { kTTAdd, kTTHadamard, kTuckerBinary };

/// Called on every frame before it is written; may alter the payload.
using FaultHook = std::function<void(int from, int to, WireMessage& message)>;

/// n simulated servers, one thread each, plus a coordinator that lives in
/// the calling thread. Every step is an OpRequest answered by OpDone (or
/// Error), so the log order does not depend on scheduling.
class Cluster {
 public:
  static std::unique_ptr<Cluster> spawn(std::size_t n, TransportKind transport,
                                        const ClusterConfig& config = {});
  ~Cluster();
  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  std::size_t size() const;
  TransportKind transport() const;

  /// Sends every fragment to its server; receivers re-verify the hash.
  void distribute(const ShareManifest& manifest, const ShareSet& shares);

  /// Core-wise operation on two aligned operands. No tensor leaves a node.
  ShareManifest local_op(LocalOpKind kind, const ShareManifest& a,
                         const ShareManifest& b,
                         TuckerOp tucker_op = TuckerOp::kAdd);

  /// Rounding protocol: LQ sweep right to left, compression sweep left to
  /// right. Needs one core per server. Uses opt.randomize, delta and seed.
  ShareManifest tt_round(const ShareManifest& manifest, double eps,
                         const DecompositionOptions& opt);

  /// Fetches and verifies every fragment of the manifest.
  ShareSet collect(const ShareManifest& manifest);
  std::vector<std::string> held_fragments(std::size_t server);

  /// Raw access: one OpRequest, returns the OpDone payload.
  nlohmann::json request(std::size_t server, const nlohmann::json& op);
  /// Writes an arbitrary frame to a node and returns its reply.
  WireMessage send_raw(std::size_t server, const WireMessage& message);

  /// Fail-stop: closes the node's streams; later requests raise NodeFailure.
  void kill_node(std::size_t server);
  void shutdown();
  bool running() const;

  std::vector<LogEntry> log() const;
  void clear_log();
  /// JSON lines.
  void write_log(const std::filesystem::path& path) const;
  void set_fault_hook(FaultHook hook);

  struct Impl;

 private:
  explicit Cluster(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

std::unique_ptr<Cluster> spawn_cluster(std::size_t n, TransportKind transport,
                                       const ClusterConfig& config = {});
void distribute(Cluster& cluster, const ShareSet& shares,
                const ShareManifest& manifest);
ShareManifest dispersed_local_op(Cluster& cluster, LocalOpKind kind,
                                 const ShareManifest& a, const ShareManifest& b,
                                 TuckerOp tucker_op = TuckerOp::kAdd);
ShareManifest dispersed_tt_round(Cluster& cluster, const ShareManifest& manifest,
                                 double eps, bool randomize, double delta,
                                 std::uint64_t seed);

/// Fresh-entropy hook: re-randomizes dispersed shares between operations by
/// running the rounding protocol with a new seed.
ShareManifest refresh_shares(Cluster& cluster, const ShareManifest& manifest,
                             double eps, double delta, std::uint64_t seed);

std::string_view local_op_name(LocalOpKind kind);

}  // namespace tnvault
