#include "tnvault/cluster.hpp"

#include <array>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "tnvault/errors.hpp"
#include "tnvault/tensor_io.hpp"
#include "transport.hpp"

namespace tnvault {

using nlohmann::json;
using detail::Endpoint;

namespace {

constexpr std::uint64_t kMaxPayload = std::uint64_t{1} << 31;

WireMessage read_frame(Endpoint& ep) {
  std::array<std::uint8_t, kWireHeaderSize> header{};
  ep.read_exact(header.data(), header.size());
  const WireHeader h = decode_header(header);
  require(h.payload_len <= kMaxPayload, ErrorCode::kProtocolViolation,
          "payload of " + std::to_string(h.payload_len) + " bytes refused");
  WireMessage m{h.type, std::vector<std::uint8_t>(h.payload_len)};
  if (h.payload_len > 0) ep.read_exact(m.payload.data(), m.payload.size());
  return m;
}

WireMessage blob(const DenseTensor& t) {
  return WireMessage{MessageType::kTensorBlob, encode_dt(t)};
}

DenseTensor matrix_tensor(const Matrix& m) {
  return DenseTensor({static_cast<std::size_t>(m.rows()),
                      static_cast<std::size_t>(m.cols())},
                     std::vector<double>(m.data(), m.data() + m.size()));
}

Matrix tensor_matrix(const DenseTensor& t) {
  require(t.order() == 2, ErrorCode::kProtocolViolation,
          "expected a matrix blob, got " + shape_string(t.shape()));
  return t.as_matrix(t.dim(0), t.dim(1));
}

// Error::what() is "<Name>: <detail>"; the wire carries the two apart.
std::string detail_of(const Error& e) {
  std::string what = e.what();
  const std::string prefix = std::string(error_name(e.code())) + ": ";
  if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
  return what;
}

WireMessage error_message(ErrorCode code, const std::string& detail) {
  return WireMessage::json_message(
      MessageType::kError,
      json{{"code", error_name(code)}, {"message", detail}}.dump());
}

std::string_view tucker_op_name(TuckerOp op) {
  switch (op) {
    case TuckerOp::kAdd: return "add";
    case TuckerOp::kDirectSum: return "direct_sum";
    case TuckerOp::kHadamard: return "hadamard";
    case TuckerOp::kKronecker: return "kronecker";
  }
  return "?";
}

TuckerOp parse_tucker_op(const std::string& s) {
  for (TuckerOp op : {TuckerOp::kAdd, TuckerOp::kDirectSum, TuckerOp::kHadamard,
                      TuckerOp::kKronecker})
    if (tucker_op_name(op) == s) return op;
  fail(ErrorCode::kProtocolViolation, "unknown Tucker operation " + s);
}

// Frames from one peer, filled by a reader thread.
class Inbox {
 public:
  void push(WireMessage m) {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(m));
    cv_.notify_all();
  }
  void close(ErrorCode code, std::string why) {
    std::lock_guard lock(mu_);
    closed_ = true;
    code_ = code;
    why_ = std::move(why);
    cv_.notify_all();
  }
  WireMessage pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !queue_.empty() || closed_; });
    if (queue_.empty()) fail(code_, why_);
    WireMessage m = std::move(queue_.front());
    queue_.pop_front();
    return m;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<WireMessage> queue_;
  bool closed_ = false;
  ErrorCode code_ = ErrorCode::kNodeFailure;
  std::string why_;
};

}  // namespace

json LogEntry::to_json() const {
  return json{{"seq", seq},
              {"from", from},
              {"to", to},
              {"type", message_type_name(type)},
              {"payload_len", payload_len},
              {"label", label},
              {"payload_sha256", payload_sha256},
              {"t", t}};
}

std::string_view local_op_name(LocalOpKind kind) {
  switch (kind) {
    case LocalOpKind::kTTAdd: return "tt_add";
    case LocalOpKind::kTTHadamard: return "tt_hadamard";
    case LocalOpKind::kTuckerBinary: return "tucker_binary";
  }
  return "?";
}

ClusterConfig load_cluster_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError,
          "cannot open cluster config " + path.string());
  ClusterConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kFormatError,
            path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "host") {
      cfg.host = value;
    } else if (key == "base_port") {
      std::size_t used = 0;
      unsigned long port = 0;
      try {
        port = std::stoul(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used == value.size() && used > 0 && port <= 65535,
              ErrorCode::kFormatError, "bad base_port " + value);
      cfg.base_port = static_cast<std::uint16_t>(port);
    } else {
      fail(ErrorCode::kFormatError, "unknown cluster config key " + key);
    }
  }
  return cfg;
}

// ---- Implementation

struct Cluster::Impl {
  struct Node;

  TransportKind transport = TransportKind::kInMemory;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  mutable std::mutex log_mu;
  std::vector<LogEntry> entries;
  std::uint64_t next_seq = 0;
  FaultHook hook;

  std::vector<std::unique_ptr<Node>> nodes;
  std::vector<std::unique_ptr<Endpoint>> to_node;  // coordinator side
  std::vector<bool> alive;
  bool running = false;

  void send(Endpoint& ep, int from, int to, WireMessage m,
            const std::string& label) {
    {
      std::lock_guard lock(log_mu);
      if (hook) hook(from, to, m);
      LogEntry e;
      e.seq = next_seq++;
      e.from = from;
      e.to = to;
      e.type = m.type;
      e.payload_len = m.payload.size();
      e.label = label;
      e.payload_sha256 = sha256_hex(m.payload);
      e.t = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
      entries.push_back(std::move(e));
    }
    const auto bytes = encode_message(m);
    ep.write_all(bytes.data(), bytes.size());
  }

  WireMessage exchange(std::size_t s, const json& op,
                       const std::vector<std::pair<WireMessage, std::string>>&
                           extra = {});
  json call(std::size_t s, const json& op,
            const std::vector<std::pair<WireMessage, std::string>>& extra = {});
  WireMessage reply_from(std::size_t s);
  void shutdown();
};

struct Cluster::Impl::Node {
  struct Held {
    DenseTensor block;
    std::size_t core_index = 0;
  };
  struct Session {
    DenseTensor work;  // orthogonalized core, waiting for the compress sweep
    std::size_t k = 0;
  };

  int id = 0;
  Cluster::Impl* owner = nullptr;
  std::unique_ptr<Endpoint> coord;
  std::map<int, std::unique_ptr<Endpoint>> peers;
  std::map<int, std::unique_ptr<Inbox>> inbox;
  std::vector<std::thread> readers;
  std::thread worker;

  // Touched by the worker thread only.
  std::map<std::string, Held> held;
  std::map<std::string, Session> sessions;

  void start() {
    for (auto& [peer, ep] : peers) {
      Inbox* box = inbox.at(peer).get();
      Endpoint* e = ep.get();
      const int p = peer;
      readers.emplace_back([box, e, p] {
        for (;;) {
          try {
            box->push(read_frame(*e));
          } catch (const Error& err) {
            box->close(err.code() == ErrorCode::kProtocolViolation
                           ? ErrorCode::kProtocolViolation
                           : ErrorCode::kNodeFailure,
                       "stream from server " + std::to_string(p) + ": " +
                           detail_of(err));
            return;
          }
        }
      });
    }
    worker = std::thread([this] { run(); });
  }

  void close_all() {
    coord->close();
    for (auto& [p, ep] : peers) ep->close();
  }

  void join() {
    if (worker.joinable()) worker.join();
    for (auto& r : readers)
      if (r.joinable()) r.join();
  }

  void reply(WireMessage m, const std::string& label) {
    owner->send(*coord, id, kCoordinatorId, std::move(m), label);
  }

  void send_peer(int to, WireMessage m, const std::string& label) {
    const auto it = peers.find(to);
    require(it != peers.end(), ErrorCode::kUnknownServer,
            "no link to server " + std::to_string(to));
    owner->send(*it->second, id, to, std::move(m), label);
  }

  WireMessage receive_peer(int from, MessageType expect) {
    const auto it = inbox.find(from);
    require(it != inbox.end(), ErrorCode::kUnknownServer,
            "no link from server " + std::to_string(from));
    WireMessage m = it->second->pop();
    require(m.type == expect, ErrorCode::kProtocolViolation,
            "expected " + std::string(message_type_name(expect)) +
                " from server " + std::to_string(from) + ", got " +
                std::string(message_type_name(m.type)));
    return m;
  }

  const Held& fragment(const std::string& fid) const {
    const auto it = held.find(fid);
    require(it != held.end(), ErrorCode::kMissingFragment,
            "server " + std::to_string(id) + " does not hold " + fid);
    return it->second;
  }

  json done(const std::string& fid, const DenseTensor& t) {
    const auto bytes = encode_dt(t);
    return json{{"fragment_id", fid},
                {"content_hash", sha256_hex(bytes)},
                {"shape", t.shape()}};
  }

  void run() {
    for (;;) {
      try {
        WireMessage m;
        try {
          m = read_frame(*coord);
        } catch (const Error& e) {
          // A bad header leaves the stream unsynchronized: report and stop.
          if (e.code() == ErrorCode::kProtocolViolation)
            reply(error_message(e.code(), detail_of(e)), "ProtocolViolation");
          close_all();
          return;
        }
        if (m.type != MessageType::kOpRequest) {
          reply(error_message(ErrorCode::kProtocolViolation,
                              "expected OpRequest, got " +
                                  std::string(message_type_name(m.type))),
                "ProtocolViolation");
          continue;
        }
        json op;
        std::string name;
        try {
          op = json::parse(m.text());
          name = op.at("op").get<std::string>();
        } catch (const json::exception& e) {
          reply(error_message(ErrorCode::kProtocolViolation,
                              std::string("bad OpRequest: ") + e.what()),
                "ProtocolViolation");
          continue;
        }
        if (name == "shutdown") {
          reply(WireMessage::json_message(MessageType::kOpDone, "{}"), name);
          return;
        }
        try {
          handle(name, op);
        } catch (const Error& e) {
          reply(error_message(e.code(), detail_of(e)),
                std::string(error_name(e.code())));
        } catch (const json::exception& e) {
          reply(error_message(ErrorCode::kProtocolViolation,
                              std::string("bad OpRequest: ") + e.what()),
                "ProtocolViolation");
        } catch (const std::exception& e) {
          reply(error_message(ErrorCode::kNumericalFailure, e.what()),
                "NumericalFailure");
        }
      } catch (const std::exception&) {
        // Coordinator link is gone.
        return;
      }
    }
  }

  void handle(const std::string& name, const json& op) {
    if (name == "store") return op_store(op);
    if (name == "local") return op_local(op);
    if (name == "round_orth") return op_round_orth(op);
    if (name == "round_compress") return op_round_compress(op);
    if (name == "fetch") {
      const Held& h = fragment(op.at("fragment_id").get<std::string>());
      return reply(blob(h.block), "fragment");
    }
    if (name == "list") {
      json ids = json::array();
      for (const auto& [fid, h] : held) ids.push_back(fid);
      return reply(WireMessage::json_message(MessageType::kOpDone,
                                             json{{"fragments", ids}}.dump()),
                   name);
    }
    fail(ErrorCode::kProtocolViolation, "unknown operation " + name);
  }

  void op_store(const json& op) {
    const std::string fid = op.at("fragment_id").get<std::string>();
    WireMessage m = read_frame(*coord);
    require(m.type == MessageType::kTensorBlob, ErrorCode::kProtocolViolation,
            "store expects a TensorBlob, got " +
                std::string(message_type_name(m.type)));
    require(sha256_hex(m.payload) == op.at("content_hash").get<std::string>(),
            ErrorCode::kHashMismatch,
            "fragment " + fid + " arrived with a different content hash");
    held[fid] = Held{decode_dt(m.payload), op.at("core_index").get<std::size_t>()};
    reply(WireMessage::json_message(MessageType::kOpDone,
                                    json{{"fragment_id", fid}}.dump()),
          "store");
  }

  void op_local(const json& op) {
    const std::string kind = op.at("kind").get<std::string>();
    const Held& a = fragment(op.at("a").get<std::string>());
    const Held& b = fragment(op.at("b").get<std::string>());
    const std::size_t k = op.at("core_index").get<std::size_t>();
    require(a.core_index == k && b.core_index == k,
            ErrorCode::kMisalignedShares,
            "operands are not core " + std::to_string(k) + " on server " +
                std::to_string(id));
    DenseTensor out;
    if (kind == "tt_add") {
      out = tt_add_core(a.block, b.block, k, op.at("order").get<std::size_t>());
    } else if (kind == "tt_hadamard") {
      out = tt_hadamard_core(a.block, b.block);
    } else if (kind == "tucker_binary") {
      out = tucker_binary_block(parse_tucker_op(op.at("tucker_op")), a.block,
                                b.block, op.at("is_core").get<bool>());
    } else {
      fail(ErrorCode::kProtocolViolation, "unknown local kind " + kind);
    }
    const std::string out_id = op.at("out_id").get<std::string>();
    const json d = done(out_id, out);
    held[out_id] = Held{std::move(out), k};
    reply(WireMessage::json_message(MessageType::kOpDone, d.dump()), "local");
  }

  void op_round_orth(const json& op) {
    const std::string session = op.at("session").get<std::string>();
    const std::size_t k = op.at("k").get<std::size_t>();
    const int recv_from = op.at("recv_from").get<int>();
    const int send_to = op.at("send_to").get<int>();
    require(!sessions.contains(session), ErrorCode::kProtocolViolation,
            "core " + std::to_string(k) + " already orthogonalized in this round");
    const Held& h = fragment(op.at("fragment_id").get<std::string>());
    require(h.core_index == k, ErrorCode::kProtocolViolation,
            "round step for core " + std::to_string(k) + " sent to core " +
                std::to_string(h.core_index));
    DenseTensor work = h.block;
    if (recv_from >= 0) {
      const Matrix l =
          tensor_matrix(decode_dt(receive_peer(recv_from, MessageType::kTensorBlob).payload));
      work = absorb_right_factor(work, l);
    }
    if (k > 0) {
      require(send_to >= 0, ErrorCode::kProtocolViolation,
              "core " + std::to_string(k) + " has no left neighbour");
      OrthogonalizeStep step = round_orthogonalize_step(work);
      work = std::move(step.core);
      send_peer(send_to, blob(matrix_tensor(step.l)), "lq_factor");
    }
    sessions[session] = Session{std::move(work), k};
    reply(WireMessage::json_message(MessageType::kOpDone,
                                    json{{"session", session}, {"k", k}}.dump()),
          "round_orth");
  }

  void op_round_compress(const json& op) {
    const std::string session = op.at("session").get<std::string>();
    const std::size_t k = op.at("k").get<std::size_t>();
    const std::size_t order = op.at("order").get<std::size_t>();
    const int recv_from = op.at("recv_from").get<int>();
    const int send_to = op.at("send_to").get<int>();
    const auto it = sessions.find(session);
    require(it != sessions.end() && it->second.k == k,
            ErrorCode::kProtocolViolation,
            "compress step for core " + std::to_string(k) +
                " before its orthogonalization step");
    std::optional<RoundCarry> carry;
    if (recv_from >= 0) {
      const json header =
          json::parse(receive_peer(recv_from, MessageType::kOpRequest).text());
      require(header.value("op", "") == "round_carry",
              ErrorCode::kProtocolViolation, "expected a round_carry header");
      RoundCarry c;
      c.norm = header.at("norm").get<double>();
      c.factor = tensor_matrix(
          decode_dt(receive_peer(recv_from, MessageType::kTensorBlob).payload));
      if (header.at("gram").get<bool>())
        c.gram = tensor_matrix(
            decode_dt(receive_peer(recv_from, MessageType::kTensorBlob).payload));
      carry = std::move(c);
    }
    DecompositionOptions opt;
    opt.randomize = op.at("randomize").get<bool>();
    opt.delta = op.at("delta").get<double>();
    opt.seed = op.at("seed").get<std::uint64_t>();
    CompressStep step = round_compress_step(it->second.work,
                                            carry ? &*carry : nullptr, k, order,
                                            op.at("eps").get<double>(), opt);
    sessions.erase(it);
    if (step.carry) {
      require(send_to >= 0, ErrorCode::kProtocolViolation,
              "core " + std::to_string(k) + " has no right neighbour");
      const bool has_gram = step.carry->gram.size() > 0;
      send_peer(send_to,
                WireMessage::json_message(
                    MessageType::kOpRequest,
                    json{{"op", "round_carry"},
                         {"norm", step.carry->norm},
                         {"gram", has_gram}}
                        .dump()),
                "round_carry");
      send_peer(send_to, blob(matrix_tensor(step.carry->factor)), "carry_factor");
      if (has_gram)
        send_peer(send_to, blob(matrix_tensor(step.carry->gram)), "carry_gram");
    }
    const std::string out_id = op.at("out_id").get<std::string>();
    const json d = done(out_id, step.core);
    held[out_id] = Held{std::move(step.core), k};
    reply(WireMessage::json_message(MessageType::kOpDone, d.dump()),
          "round_compress");
  }
};

WireMessage Cluster::Impl::reply_from(std::size_t s) {
  try {
    return read_frame(*to_node[s]);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kProtocolViolation) throw;
    fail(ErrorCode::kNodeFailure,
         "server " + std::to_string(s) + " did not answer: " + detail_of(e));
  }
}

WireMessage Cluster::Impl::exchange(
    std::size_t s, const json& op,
    const std::vector<std::pair<WireMessage, std::string>>& extra) {
  require(s < nodes.size(), ErrorCode::kUnknownServer,
          "no server " + std::to_string(s) + " in a cluster of " +
              std::to_string(nodes.size()));
  require(running, ErrorCode::kNodeFailure, "cluster is shut down");
  try {
    send(*to_node[s], kCoordinatorId, static_cast<int>(s),
         WireMessage::json_message(MessageType::kOpRequest, op.dump()),
         op.at("op").get<std::string>());
    for (const auto& [m, label] : extra)
      send(*to_node[s], kCoordinatorId, static_cast<int>(s), m, label);
  } catch (const Error& e) {
    fail(ErrorCode::kNodeFailure,
         "server " + std::to_string(s) + " is unreachable: " + detail_of(e));
  }
  WireMessage r = reply_from(s);
  if (r.type == MessageType::kError) {
    ErrorCode code = ErrorCode::kNodeFailure;
    std::string detail = r.text();
    try {
      const json j = json::parse(r.text());
      code = error_from_name(j.at("code").get<std::string>())
                 .value_or(ErrorCode::kNodeFailure);
      detail = j.at("message").get<std::string>();
    } catch (const json::exception&) {
    }
    fail(code, "server " + std::to_string(s) + ": " + detail);
  }
  return r;
}

json Cluster::Impl::call(
    std::size_t s, const json& op,
    const std::vector<std::pair<WireMessage, std::string>>& extra) {
  const WireMessage r = exchange(s, op, extra);
  require(r.type == MessageType::kOpDone, ErrorCode::kProtocolViolation,
          "expected OpDone from server " + std::to_string(s) + ", got " +
              std::string(message_type_name(r.type)));
  return json::parse(r.text());
}

void Cluster::Impl::shutdown() {
  if (!running) return;
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    if (!alive[s]) continue;
    try {
      call(s, json{{"op", "shutdown"}});
    } catch (const Error&) {
    }
  }
  running = false;
  for (auto& n : nodes) n->close_all();
  for (auto& e : to_node) e->close();
  for (auto& n : nodes) n->join();
  std::fill(alive.begin(), alive.end(), false);
}

// ---- Cluster

Cluster::Cluster(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

Cluster::~Cluster() {
  try {
    impl_->shutdown();
  } catch (...) {
  }
}

std::unique_ptr<Cluster> Cluster::spawn(std::size_t n, TransportKind transport,
                                        const ClusterConfig& config) {
  require(n >= 2, ErrorCode::kTooFewServers,
          "a cluster needs at least 2 servers, got " + std::to_string(n));
  auto impl = std::make_unique<Impl>();
  impl->transport = transport;
  std::size_t link_index = 0;
  auto make_link = [&]() {
    if (transport == TransportKind::kInMemory) return detail::make_memory_link();
    const std::uint16_t port =
        config.base_port == 0
            ? 0
            : static_cast<std::uint16_t>(config.base_port + link_index);
    ++link_index;
    return detail::make_socket_link(config.host, port);
  };
  for (std::size_t i = 0; i < n; ++i) {
    auto node = std::make_unique<Impl::Node>();
    node->id = static_cast<int>(i);
    node->owner = impl.get();
    auto [c, s] = make_link();
    impl->to_node.push_back(std::move(c));
    node->coord = std::move(s);
    impl->nodes.push_back(std::move(node));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto [a, b] = make_link();
      auto& ni = *impl->nodes[i];
      auto& nj = *impl->nodes[j];
      ni.peers[static_cast<int>(j)] = std::move(a);
      nj.peers[static_cast<int>(i)] = std::move(b);
      ni.inbox[static_cast<int>(j)] = std::make_unique<Inbox>();
      nj.inbox[static_cast<int>(i)] = std::make_unique<Inbox>();
    }
  }
  impl->alive.assign(n, true);
  impl->running = true;
  for (auto& node : impl->nodes) node->start();
  return std::unique_ptr<Cluster>(new Cluster(std::move(impl)));
}

std::size_t Cluster::size() const { return impl_->nodes.size(); }
TransportKind Cluster::transport() const { return impl_->transport; }
bool Cluster::running() const { return impl_->running; }

void Cluster::distribute(const ShareManifest& manifest, const ShareSet& shares) {
  for (const FragmentEntry& e : manifest.fragments)
    require(e.server_id < size(), ErrorCode::kUnknownServer,
            "fragment " + e.fragment_id + " is assigned to server " +
                std::to_string(e.server_id) + ", cluster has " +
                std::to_string(size()));
  for (const FragmentEntry& e : manifest.fragments) {
    const auto it = shares.find(e.fragment_id);
    require(it != shares.end(), ErrorCode::kMissingFragment,
            "fragment " + e.fragment_id + " (core " +
                std::to_string(e.core_index) + ") not in the share set");
    impl_->call(e.server_id,
                json{{"op", "store"},
                     {"fragment_id", e.fragment_id},
                     {"core_index", e.core_index},
                     {"content_hash", e.content_hash}},
                {{WireMessage{MessageType::kTensorBlob, it->second}, "core"}});
  }
}

ShareManifest Cluster::local_op(LocalOpKind kind, const ShareManifest& a,
                                const ShareManifest& b, TuckerOp tucker_op) {
  const Format f = a.scheme();
  require(f == b.scheme(), ErrorCode::kMisalignedShares,
          "operands use different formats");
  if (kind == LocalOpKind::kTuckerBinary) {
    require(f == Format::kTucker, ErrorCode::kInvalidArgument,
            "tucker_binary needs Tucker shares");
  } else {
    require(f == Format::kTT, ErrorCode::kInvalidArgument,
            std::string(local_op_name(kind)) + " needs TT shares");
  }
  require(a.fragments.size() == b.fragments.size(), ErrorCode::kMisalignedShares,
          "operands have different numbers of fragments");
  require(a.permutation_seeds == b.permutation_seeds &&
              a.axis_order == b.axis_order,
          ErrorCode::kMisalignedShares,
          "operands were permuted differently");
  if (kind == LocalOpKind::kTuckerBinary &&
      (tucker_op == TuckerOp::kDirectSum || tucker_op == TuckerOp::kKronecker))
    require(a.permutation_seeds.empty() && a.axis_order.empty(),
            ErrorCode::kInvalidArgument,
            "direct sum and Kronecker change mode sizes; unpermuted shares only");

  const std::size_t count = a.fragments.size();
  ShareManifest out;
  out.hash_algorithm = a.hash_algorithm;
  out.permutation_seeds = a.permutation_seeds;
  out.axis_order = a.axis_order;
  out.n_servers = a.n_servers;
  out.created_at = a.created_at;
  std::vector<Shape> shapes;
  for (std::size_t k = 0; k < count; ++k) {
    const FragmentEntry& ea = a.fragment(k);
    const FragmentEntry& eb = b.fragment(k);
    require(ea.server_id == eb.server_id, ErrorCode::kMisalignedShares,
            "core " + std::to_string(k) + " is on server " +
                std::to_string(ea.server_id) + " and server " +
                std::to_string(eb.server_id));
    std::string label(local_op_name(kind));
    if (kind == LocalOpKind::kTuckerBinary) label += ":" + std::string(tucker_op_name(tucker_op));
    const std::string out_id =
        derived_fragment_id(ea.fragment_id + "|" + eb.fragment_id + "|" + label);
    const json d = impl_->call(ea.server_id,
                               json{{"op", "local"},
                                    {"kind", local_op_name(kind)},
                                    {"tucker_op", tucker_op_name(tucker_op)},
                                    {"a", ea.fragment_id},
                                    {"b", eb.fragment_id},
                                    {"core_index", k},
                                    {"order", count},
                                    {"is_core", k + 1 == count},
                                    {"out_id", out_id}});
    FragmentEntry e{out_id, ea.server_id, d.at("content_hash").get<std::string>(),
                    k, d.at("shape").get<Shape>()};
    shapes.push_back(e.shape);
    out.fragments.push_back(std::move(e));
  }
  out.structure = structure_from_shapes(f, shapes);
  return out;
}

ShareManifest Cluster::tt_round(const ShareManifest& manifest, double eps,
                                const DecompositionOptions& opt) {
  require(manifest.scheme() == Format::kTT, ErrorCode::kInvalidArgument,
          "dispersed rounding needs TT shares");
  require(eps > 0.0 && eps < 1.0, ErrorCode::kInvalidThreshold,
          "eps must lie in (0,1), got " + std::to_string(eps));
  if (opt.randomize) validate_threshold(opt.delta);
  const std::size_t n = manifest.fragments.size();
  std::vector<int> server(n);
  std::set<std::size_t> distinct;
  for (std::size_t k = 0; k < n; ++k) {
    server[k] = static_cast<int>(manifest.fragment(k).server_id);
    distinct.insert(manifest.fragment(k).server_id);
  }
  require(distinct.size() == n, ErrorCode::kInvalidArgument,
          "dispersed rounding needs one core per server (" + std::to_string(n) +
              " cores on " + std::to_string(distinct.size()) + " servers)");

  std::ostringstream material;
  material.precision(17);
  for (const auto& e : manifest.fragments) material << e.fragment_id << '|';
  material << "tt_round|" << eps << '|' << opt.randomize << '|' << opt.delta
           << '|' << opt.seed;
  const std::string session = derived_fragment_id(material.str());

  for (std::size_t k = n; k-- > 0;) {
    impl_->call(static_cast<std::size_t>(server[k]),
                json{{"op", "round_orth"},
                     {"session", session},
                     {"fragment_id", manifest.fragment(k).fragment_id},
                     {"k", k},
                     {"order", n},
                     {"recv_from", k + 1 < n ? server[k + 1] : -1},
                     {"send_to", k > 0 ? server[k - 1] : -1}});
  }
  ShareManifest out;
  out.hash_algorithm = manifest.hash_algorithm;
  out.permutation_seeds = manifest.permutation_seeds;
  out.axis_order = manifest.axis_order;
  out.n_servers = manifest.n_servers;
  out.created_at = manifest.created_at;
  std::vector<Shape> shapes;
  for (std::size_t k = 0; k < n; ++k) {
    const std::string out_id =
        derived_fragment_id(manifest.fragment(k).fragment_id + "|" + session);
    const json d = impl_->call(static_cast<std::size_t>(server[k]),
                               json{{"op", "round_compress"},
                                    {"session", session},
                                    {"k", k},
                                    {"order", n},
                                    {"eps", eps},
                                    {"randomize", opt.randomize},
                                    {"delta", opt.delta},
                                    {"seed", opt.seed},
                                    {"recv_from", k > 0 ? server[k - 1] : -1},
                                    {"send_to", k + 1 < n ? server[k + 1] : -1},
                                    {"out_id", out_id}});
    FragmentEntry e{out_id, static_cast<std::size_t>(server[k]),
                    d.at("content_hash").get<std::string>(), k,
                    d.at("shape").get<Shape>()};
    shapes.push_back(e.shape);
    out.fragments.push_back(std::move(e));
  }
  out.structure = structure_from_shapes(Format::kTT, shapes);
  return out;
}

ShareSet Cluster::collect(const ShareManifest& manifest) {
  ShareSet out;
  for (const FragmentEntry& e : manifest.fragments) {
    const WireMessage r = impl_->exchange(
        e.server_id, json{{"op", "fetch"}, {"fragment_id", e.fragment_id}});
    require(r.type == MessageType::kTensorBlob, ErrorCode::kProtocolViolation,
            "fetch answered with " + std::string(message_type_name(r.type)));
    verify_fragment(e, r.payload);
    out.emplace(e.fragment_id, r.payload);
  }
  return out;
}

std::vector<std::string> Cluster::held_fragments(std::size_t server) {
  return impl_->call(server, json{{"op", "list"}})
      .at("fragments")
      .get<std::vector<std::string>>();
}

json Cluster::request(std::size_t server, const json& op) {
  return impl_->call(server, op);
}

WireMessage Cluster::send_raw(std::size_t server, const WireMessage& message) {
  require(server < size(), ErrorCode::kUnknownServer,
          "no server " + std::to_string(server));
  try {
    impl_->send(*impl_->to_node[server], kCoordinatorId,
                static_cast<int>(server), message, "raw");
  } catch (const Error& e) {
    fail(ErrorCode::kNodeFailure, "server " + std::to_string(server) +
                                      " is unreachable: " + detail_of(e));
  }
  return impl_->reply_from(server);
}

void Cluster::kill_node(std::size_t server) {
  require(server < size(), ErrorCode::kUnknownServer,
          "no server " + std::to_string(server));
  impl_->alive[server] = false;
  impl_->nodes[server]->close_all();
}

void Cluster::shutdown() { impl_->shutdown(); }

std::vector<LogEntry> Cluster::log() const {
  std::lock_guard lock(impl_->log_mu);
  return impl_->entries;
}

void Cluster::clear_log() {
  std::lock_guard lock(impl_->log_mu);
  impl_->entries.clear();
}

void Cluster::write_log(const std::filesystem::path& path) const {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::kIoError,
          "cannot write " + path.string());
  for (const LogEntry& e : log()) out << e.to_json().dump() << '\n';
}

void Cluster::set_fault_hook(FaultHook hook) {
  std::lock_guard lock(impl_->log_mu);
  impl_->hook = std::move(hook);
}

// ---- Free functions

std::unique_ptr<Cluster> spawn_cluster(std::size_t n, TransportKind transport,
                                       const ClusterConfig& config) {
  return Cluster::spawn(n, transport, config);
}

void distribute(Cluster& cluster, const ShareSet& shares,
                const ShareManifest& manifest) {
  cluster.distribute(manifest, shares);
}

ShareManifest dispersed_local_op(Cluster& cluster, LocalOpKind kind,
                                 const ShareManifest& a, const ShareManifest& b,
                                 TuckerOp tucker_op) {
  return cluster.local_op(kind, a, b, tucker_op);
}

ShareManifest dispersed_tt_round(Cluster& cluster, const ShareManifest& manifest,
                                 double eps, bool randomize, double delta,
                                 std::uint64_t seed) {
  DecompositionOptions opt;
  opt.randomize = randomize;
  opt.delta = delta;
  opt.seed = seed;
  return cluster.tt_round(manifest, eps, opt);
}

ShareManifest refresh_shares(Cluster& cluster, const ShareManifest& manifest,
                             double eps, double delta, std::uint64_t seed) {
  return dispersed_tt_round(cluster, manifest, eps, true, delta, seed);
}

}  // namespace tnvault
