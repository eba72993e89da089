#include "tnvault/representations.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <numeric>

#include "tnvault/errors.hpp"

namespace tnvault {

std::string_view format_name(Format f) {
  switch (f) {
    case Format::kTT: return "tt";
    case Format::kTR: return "tr";
    case Format::kTucker: return "tucker";
    case Format::kHT: return "ht";
  }
  return "?";
}

Format parse_format(std::string_view name) {
  if (name == "tt") return Format::kTT;
  if (name == "tr") return Format::kTR;
  if (name == "tucker") return Format::kTucker;
  if (name == "ht") return Format::kHT;
  fail(ErrorCode::kInvalidArgument, "unknown format '" + std::string(name) +
                                        "' (expected tt|tr|tucker|ht)");
}

// ---------------------------------------------------------------- chains

Shape CoreChain::mode_sizes() const {
  Shape s;
  for (const auto& c : cores) s.push_back(c.dim(1));
  return s;
}

std::vector<std::size_t> CoreChain::ranks() const {
  std::vector<std::size_t> r;
  if (cores.empty()) return r;
  r.push_back(cores.front().dim(0));
  for (const auto& c : cores) r.push_back(c.dim(2));
  return r;
}

std::size_t CoreChain::parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : cores) n += c.size();
  return n;
}

namespace {

void validate_chain(const CoreChain& chain, bool ring) {
  require(!chain.cores.empty(), ErrorCode::kShapeMismatch, "no cores");
  for (std::size_t k = 0; k < chain.cores.size(); ++k) {
    const auto& c = chain.cores[k];
    require(c.order() == 3, ErrorCode::kShapeMismatch,
            "core " + std::to_string(k) + " is not 3rd-order");
    if (k + 1 < chain.cores.size()) {
      require(c.dim(2) == chain.cores[k + 1].dim(0), ErrorCode::kShapeMismatch,
              "rank mismatch between cores " + std::to_string(k) + " and " +
                  std::to_string(k + 1));
    }
  }
  const auto r0 = chain.cores.front().dim(0);
  const auto rn = chain.cores.back().dim(2);
  if (ring) {
    require(r0 == rn, ErrorCode::kShapeMismatch, "ring is not closed");
  } else {
    require(r0 == 1 && rn == 1, ErrorCode::kShapeMismatch,
            "TT boundary ranks must be 1");
  }
}

}  // namespace

void TTRepresentation::validate() const { validate_chain(*this, false); }
void TRRepresentation::validate() const { validate_chain(*this, true); }

// ---------------------------------------------------------------- Tucker

Shape TuckerRepresentation::mode_sizes() const {
  Shape s;
  for (const auto& f : factors) s.push_back(static_cast<std::size_t>(f.rows()));
  return s;
}

std::vector<std::size_t> TuckerRepresentation::ranks() const {
  std::vector<std::size_t> r;
  for (const auto& f : factors) r.push_back(static_cast<std::size_t>(f.cols()));
  return r;
}

std::size_t TuckerRepresentation::parameter_count() const {
  std::size_t n = core.size();
  for (const auto& f : factors) n += static_cast<std::size_t>(f.size());
  return n;
}

void TuckerRepresentation::validate() const {
  require(!factors.empty() && core.order() == factors.size(),
          ErrorCode::kShapeMismatch, "core order does not match factor count");
  for (std::size_t k = 0; k < factors.size(); ++k) {
    require(static_cast<std::size_t>(factors[k].cols()) == core.dim(k),
            ErrorCode::kShapeMismatch,
            "factor " + std::to_string(k) + " columns do not match core");
  }
}

// ---------------------------------------------------------------- tree

DimensionTree::DimensionTree(std::vector<Node> nodes)
    : nodes_(std::move(nodes)) {}

DimensionTree DimensionTree::balanced(std::size_t order) {
  require(order >= 1, ErrorCode::kInvalidTree, "empty tree");
  std::vector<Node> nodes;
  std::function<int(std::size_t, std::size_t)> build =
      [&](std::size_t lo, std::size_t hi) -> int {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(Node{});
    std::vector<std::size_t> modes(hi - lo);
    std::iota(modes.begin(), modes.end(), lo);
    nodes[id].modes = modes;
    if (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo + 1) / 2;
      const int l = build(lo, mid);
      const int r = build(mid, hi);
      nodes[id].left = l;
      nodes[id].right = r;
    }
    return id;
  };
  build(0, order);
  return DimensionTree(std::move(nodes));
}

DimensionTree DimensionTree::parse(std::string_view text) {
  std::vector<Node> nodes;
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  };
  auto expect = [&](char c) {
    skip();
    require(pos < text.size() && text[pos] == c, ErrorCode::kInvalidTree,
            std::string("expected '") + c + "' in tree '" + std::string(text) +
                "'");
    ++pos;
  };
  std::function<int()> parse_node = [&]() -> int {
    skip();
    require(pos < text.size(), ErrorCode::kInvalidTree, "truncated tree");
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(Node{});
    if (text[pos] == '(') {
      ++pos;
      const int l = parse_node();
      expect(',');
      const int r = parse_node();
      expect(')');
      nodes[id].left = l;
      nodes[id].right = r;
      auto modes = nodes[l].modes;
      modes.insert(modes.end(), nodes[r].modes.begin(), nodes[r].modes.end());
      nodes[id].modes = modes;
    } else {
      std::size_t value = 0;
      const std::size_t start = pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        value = value * 10 + static_cast<std::size_t>(text[pos] - '0');
        ++pos;
      }
      require(pos > start && value >= 1, ErrorCode::kInvalidTree,
              "expected a 1-based mode number in tree '" + std::string(text) +
                  "'");
      nodes[id].modes = {value - 1};
    }
    return id;
  };
  parse_node();
  skip();
  require(pos == text.size(), ErrorCode::kInvalidTree,
          "trailing characters in tree '" + std::string(text) + "'");
  return DimensionTree(std::move(nodes));
}

std::string DimensionTree::to_string() const {
  std::function<std::string(int)> emit = [&](int id) -> std::string {
    const auto& n = nodes_.at(static_cast<std::size_t>(id));
    if (n.is_leaf()) return std::to_string(n.modes.front() + 1);
    return "(" + emit(n.left) + "," + emit(n.right) + ")";
  };
  return nodes_.empty() ? std::string() : emit(0);
}

void DimensionTree::validate(std::size_t order) const {
  require(!nodes_.empty(), ErrorCode::kInvalidTree, "empty tree");
  std::vector<int> seen(order, 0);
  std::vector<int> visited(nodes_.size(), 0);
  std::function<void(int)> walk = [&](int id) {
    require(id >= 0 && static_cast<std::size_t>(id) < nodes_.size() &&
                !visited[static_cast<std::size_t>(id)],
            ErrorCode::kInvalidTree, "malformed child links");
    visited[static_cast<std::size_t>(id)] = 1;
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.is_leaf()) {
      require(n.right < 0 && n.modes.size() == 1, ErrorCode::kInvalidTree,
              "leaf must hold exactly one mode");
      require(n.modes[0] < order, ErrorCode::kInvalidTree,
              "leaf mode " + std::to_string(n.modes[0] + 1) +
                  " exceeds tensor order");
      ++seen[n.modes[0]];
      return;
    }
    require(n.right >= 0, ErrorCode::kInvalidTree,
            "internal node needs two children");
    walk(n.left);
    walk(n.right);
  };
  walk(0);
  for (std::size_t k = 0; k < order; ++k) {
    require(seen[k] == 1, ErrorCode::kInvalidTree,
            "leaves do not partition the modes (mode " +
                std::to_string(k + 1) + " appears " +
                std::to_string(seen[k]) + " times)");
  }
  require(std::all_of(visited.begin(), visited.end(),
                      [](int v) { return v == 1; }),
          ErrorCode::kInvalidTree, "unreachable tree nodes");
}

std::vector<std::size_t> DimensionTree::leaf_order() const {
  std::vector<std::size_t> order;
  std::function<void(int)> walk = [&](int id) {
    const auto& n = nodes_.at(static_cast<std::size_t>(id));
    if (n.is_leaf()) {
      order.push_back(n.modes.front());
      return;
    }
    walk(n.left);
    walk(n.right);
  };
  if (!nodes_.empty()) walk(0);
  return order;
}

int DimensionTree::leaf_of_mode(std::size_t mode) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf() && nodes_[i].modes.front() == mode) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

// ---------------------------------------------------------------- HT

std::size_t HTRepresentation::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

void HTRepresentation::validate() const {
  tree.validate(mode_sizes.size());
  require(ranks.size() == tree.size() && blocks.size() == tree.size(),
          ErrorCode::kShapeMismatch, "one rank and block per tree node");
  require(ranks[0] == 1, ErrorCode::kShapeMismatch, "root rank must be 1");
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& n = tree.node(i);
    const auto& b = blocks[i];
    if (n.is_leaf()) {
      require(b.order() == 2 && b.dim(0) == mode_sizes[n.modes[0]] &&
                  b.dim(1) == ranks[i],
              ErrorCode::kShapeMismatch,
              "leaf block " + std::to_string(i) + " has shape " +
                  shape_string(b.shape()));
    } else {
      const auto l = static_cast<std::size_t>(n.left);
      const auto r = static_cast<std::size_t>(n.right);
      require(b.order() == 3 && b.dim(0) == ranks[l] && b.dim(1) == ranks[r] &&
                  b.dim(2) == ranks[i],
              ErrorCode::kShapeMismatch,
              "transfer block " + std::to_string(i) + " has shape " +
                  shape_string(b.shape()));
    }
  }
}

// ---------------------------------------------------------------- reconstruct

namespace {

// Contracts cores[from..to) left to right into a (prod rows) x R_to matrix
// whose leading index is the first core's left rank.
Matrix contract_chain(const std::vector<DenseTensor>& cores, std::size_t from,
                      std::size_t to) {
  const auto& first = cores[from];
  Matrix acc = first.as_matrix(first.dim(0) * first.dim(1), first.dim(2));
  for (std::size_t k = from + 1; k < to; ++k) {
    const auto& c = cores[k];
    const Matrix next = acc * c.as_matrix(c.dim(0), c.dim(1) * c.dim(2));
    // next is [rows, I_k, R_{k+1}] column-major; fold I_k into the rows.
    acc = Eigen::Map<const Matrix>(next.data(), acc.rows() * c.dim(1),
                                   static_cast<Eigen::Index>(c.dim(2)));
  }
  return acc;
}

}  // namespace

DenseTensor reconstruct(const TTRepresentation& rep) {
  rep.validate();
  const Matrix full = contract_chain(rep.cores, 0, rep.cores.size());
  return DenseTensor(rep.mode_sizes(),
                     std::vector<double>(full.data(), full.data() + full.size()));
}

DenseTensor reconstruct(const TRRepresentation& rep) {
  rep.validate();
  const Shape modes = rep.mode_sizes();
  const auto& g0 = rep.cores.front();
  const std::size_t r0 = g0.dim(0), i0 = g0.dim(1), r1 = g0.dim(2);
  if (rep.cores.size() == 1) {
    // A(i) = trace(G[:, i, :]).
    DenseTensor out(modes);
    for (std::size_t i = 0; i < i0; ++i) {
      double tr = 0.0;
      for (std::size_t r = 0; r < r0; ++r) tr += g0({r, i, r});
      out[i] = tr;
    }
    return out;
  }
  // Z = G_1 ... G_{N-1}: (R_1 * rest) x R_0, rows ordered [R_1, I_1..I_{N-1}].
  const Matrix z = contract_chain(rep.cores, 1, rep.cores.size());
  const std::size_t rest = static_cast<std::size_t>(z.rows()) / r1;
  // A[i0, rest] = sum_{r0, r1} G0[r0, i0, r1] * Z[r1, rest, r0].
  Matrix left(static_cast<Eigen::Index>(i0), static_cast<Eigen::Index>(r0 * r1));
  for (std::size_t b = 0; b < r1; ++b)
    for (std::size_t a = 0; a < r0; ++a)
      for (std::size_t i = 0; i < i0; ++i)
        left(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a + r0 * b)) =
            g0({a, i, b});
  Matrix right(static_cast<Eigen::Index>(r0 * r1), static_cast<Eigen::Index>(rest));
  for (std::size_t a = 0; a < r0; ++a)
    for (std::size_t j = 0; j < rest; ++j)
      for (std::size_t b = 0; b < r1; ++b)
        right(static_cast<Eigen::Index>(a + r0 * b), static_cast<Eigen::Index>(j)) =
            z(static_cast<Eigen::Index>(b + r1 * j), static_cast<Eigen::Index>(a));
  const Matrix full = left * right;
  return DenseTensor(modes,
                     std::vector<double>(full.data(), full.data() + full.size()));
}

DenseTensor reconstruct(const TuckerRepresentation& rep) {
  rep.validate();
  DenseTensor t = rep.core;
  for (std::size_t k = 0; k < rep.factors.size(); ++k) {
    t = mode_product(t, rep.factors[k], k);
  }
  return t;
}

DenseTensor reconstruct(const HTRepresentation& rep) {
  rep.validate();
  std::function<Matrix(std::size_t)> node_basis = [&](std::size_t id) -> Matrix {
    const auto& n = rep.tree.node(id);
    const auto& b = rep.blocks[id];
    if (n.is_leaf()) return b.as_matrix(b.dim(0), b.dim(1));
    const Matrix ul = node_basis(static_cast<std::size_t>(n.left));
    const Matrix ur = node_basis(static_cast<std::size_t>(n.right));
    const std::size_t rl = b.dim(0), rr = b.dim(1), rt = b.dim(2);
    // (U_l x_1 B) -> [d_l, R_r, R_t], then contract R_r with U_r.
    const Matrix lb = ul * b.as_matrix(rl, rr * rt);
    DenseTensor partial({static_cast<std::size_t>(ul.rows()), rr, rt},
                        std::vector<double>(lb.data(), lb.data() + lb.size()));
    const DenseTensor full = mode_product(partial, ur, 1);
    return full.as_matrix(full.dim(0) * full.dim(1), rt);
  };
  const Matrix root = node_basis(0);
  const auto order = rep.tree.leaf_order();
  Shape permuted_shape;
  for (auto m : order) permuted_shape.push_back(rep.mode_sizes[m]);
  DenseTensor permuted(permuted_shape,
                       std::vector<double>(root.data(), root.data() + root.size()));
  return permute_axes(permuted, inverse_permutation(order));
}

}  // namespace tnvault
