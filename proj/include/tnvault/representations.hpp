#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tnvault/tensor.hpp"

namespace tnvault {

enum class Format { kTT, kTR, kTucker, kHT };

std::string_view format_name(Format f);
Format parse_format(std::string_view name);

/// Cascade of 3rd-order cores; core k has shape [R_k, I_k, R_{k+1}]
/// (0-based), so ranks() returns R_0..R_N.
struct CoreChain {
  std::vector<DenseTensor> cores;

  std::size_t order() const { return cores.size(); }
  Shape mode_sizes() const;
  std::vector<std::size_t> ranks() const;
  std::size_t parameter_count() const;
};

/// Boundary ranks R_0 = R_N = 1.
struct TTRepresentation : CoreChain {
  void validate() const;
};

/// Closed ring: R_0 = R_N >= 1, reconstruction traces over the ring bond.
struct TRRepresentation : CoreChain {
  void validate() const;
};

/// core [R_1..R_N], factor k is I_k x R_k.
struct TuckerRepresentation {
  DenseTensor core;
  std::vector<Matrix> factors;

  std::size_t order() const { return factors.size(); }
  Shape mode_sizes() const;
  std::vector<std::size_t> ranks() const;
  std::size_t parameter_count() const;
  void validate() const;
};

/// Binary dimension tree over modes {0..N-1}. nodes[0] is the root; a leaf
/// holds exactly one mode.
class DimensionTree {
 public:
  struct Node {
    std::vector<std::size_t> modes;
    int left = -1;
    int right = -1;
    bool is_leaf() const { return left < 0; }
  };

  DimensionTree() = default;
  explicit DimensionTree(std::vector<Node> nodes);

  /// Left-heavy balanced split of modes 0..order-1 in natural order.
  static DimensionTree balanced(std::size_t order);
  /// Parses the 1-based nested form, e.g. "((1,2),(3,4))" or "((1,2),3)".
  static DimensionTree parse(std::string_view text);
  std::string to_string() const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const { return nodes_.size(); }

  /// Throws InvalidTree unless the leaves partition {0..order-1}.
  void validate(std::size_t order) const;

  /// Leaf modes in left-to-right order.
  std::vector<std::size_t> leaf_order() const;
  int leaf_of_mode(std::size_t mode) const;

 private:
  std::vector<Node> nodes_;
};

/// Hierarchical Tucker: blocks[i] for node i is the leaf factor
/// [I_k, R_i] or the transfer core [R_left, R_right, R_i]; the root has
/// rank 1.
struct HTRepresentation {
  DimensionTree tree;
  Shape mode_sizes;
  std::vector<std::size_t> ranks;
  std::vector<DenseTensor> blocks;

  std::size_t order() const { return mode_sizes.size(); }
  std::size_t parameter_count() const;
  void validate() const;
};

DenseTensor reconstruct(const TTRepresentation& rep);
DenseTensor reconstruct(const TRRepresentation& rep);
DenseTensor reconstruct(const TuckerRepresentation& rep);
DenseTensor reconstruct(const HTRepresentation& rep);

}  // namespace tnvault
