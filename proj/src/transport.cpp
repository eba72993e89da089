#include "transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>

#include "tnvault/errors.hpp"

namespace tnvault::detail {

namespace {

// One direction of an in-memory stream.
struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> bytes;
  bool closed = false;
};

class MemoryEndpoint : public Endpoint {
 public:
  MemoryEndpoint(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~MemoryEndpoint() override { close(); }

  void write_all(const std::uint8_t* data, std::size_t n) override {
    std::lock_guard lock(out_->mu);
    require(!out_->closed, ErrorCode::kNodeFailure, "stream closed");
    out_->bytes.insert(out_->bytes.end(), data, data + n);
    out_->cv.notify_all();
  }

  void read_exact(std::uint8_t* data, std::size_t n) override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return in_->bytes.size() >= n || in_->closed; });
    require(in_->bytes.size() >= n, ErrorCode::kNodeFailure,
            "peer closed the stream");
    std::copy_n(in_->bytes.begin(), n, data);
    in_->bytes.erase(in_->bytes.begin(),
                     in_->bytes.begin() + static_cast<std::ptrdiff_t>(n));
  }

  void close() override {
    for (auto* p : {in_.get(), out_.get()}) {
      std::lock_guard lock(p->mu);
      p->closed = true;
      p->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

class SocketEndpoint : public Endpoint {
 public:
  explicit SocketEndpoint(int fd) : fd_(fd) {}
  ~SocketEndpoint() override { close(); }

  void write_all(const std::uint8_t* data, std::size_t n) override {
    while (n > 0) {
      const ssize_t w = ::send(fd_.load(), data, n, MSG_NOSIGNAL);
      if (w < 0 && errno == EINTR) continue;
      require(w > 0, ErrorCode::kNodeFailure,
              std::string("send failed: ") + std::strerror(errno));
      data += w;
      n -= static_cast<std::size_t>(w);
    }
  }

  void read_exact(std::uint8_t* data, std::size_t n) override {
    while (n > 0) {
      const ssize_t r = ::recv(fd_.load(), data, n, 0);
      if (r < 0 && errno == EINTR) continue;
      require(r > 0, ErrorCode::kNodeFailure, "peer closed the stream");
      data += r;
      n -= static_cast<std::size_t>(r);
    }
  }

  void close() override {
    const int fd = fd_.exchange(-1);
    if (fd >= 0) {
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
  }

 private:
  std::atomic<int> fd_;
};

[[noreturn]] void socket_failure(const std::string& what) {
  fail(ErrorCode::kTransportUnavailable, what + ": " + std::strerror(errno));
}

}  // namespace

EndpointPair make_memory_link() {
  auto ab = std::make_shared<Pipe>();
  auto ba = std::make_shared<Pipe>();
  return {std::make_unique<MemoryEndpoint>(ba, ab),
          std::make_unique<MemoryEndpoint>(ab, ba)};
}

EndpointPair make_socket_link(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  require(::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1,
          ErrorCode::kTransportUnavailable, "bad host address " + host);

  const int listener = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listener < 0) socket_failure("socket");
  const int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listener, 1) != 0) {
    ::close(listener);
    socket_failure("bind/listen on " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);

  const int client = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (client < 0) {
    ::close(listener);
    socket_failure("socket");
  }
  if (::connect(client, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(client);
    ::close(listener);
    socket_failure("connect");
  }
  const int server = ::accept4(listener, nullptr, nullptr, SOCK_CLOEXEC);
  ::close(listener);
  if (server < 0) {
    ::close(client);
    socket_failure("accept");
  }
  for (int fd : {client, server}) {
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  return {std::make_unique<SocketEndpoint>(client),
          std::make_unique<SocketEndpoint>(server)};
}

}  // namespace tnvault::detail
