#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

// Ordered reliable byte streams between two simulated parties.

namespace tnvault::detail {

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual void write_all(const std::uint8_t* data, std::size_t n) = 0;
  /// Blocks until n bytes arrived; throws NodeFailure once the peer closed.
  virtual void read_exact(std::uint8_t* data, std::size_t n) = 0;
  virtual void close() = 0;
};

using EndpointPair = std::pair<std::unique_ptr<Endpoint>, std::unique_ptr<Endpoint>>;

EndpointPair make_memory_link();

/// Loopback TCP link: listens on host:port (0 = ephemeral), connects and
/// accepts. Throws TransportUnavailable on any socket failure.
EndpointPair make_socket_link(const std::string& host, std::uint16_t port);

}  // namespace tnvault::detail
