#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace blockmf {

enum class NodeClass : std::uint8_t { kCentral = 0, kPeripheral = 1 };

inline const char* class_tag(NodeClass cls) { return cls == NodeClass::kCentral ? "c" : "p"; }

struct BlockSize {
  int central = 0;
  int peripheral = 0;

  int total() const { return central + peripheral; }
  friend bool operator==(const BlockSize&, const BlockSize&) = default;
};

struct NodeInfo {
  int block = 0;
  NodeClass cls = NodeClass::kCentral;
  int index_in_class = 0;
};

using PeripheralEdge = std::pair<int, int>;

/// Block-structured graph: r cliques whose central nodes only see their own
/// block and whose peripheral nodes may link to peripherals of other blocks.
///
/// Node ids are contiguous per block, centrals first:
///   block 0: [0, N_0^c) central, [N_0^c, N_0) peripheral; block 1 follows.
/// Central adjacency is implicit. Peripheral adjacency (intra- and
/// cross-block) is materialized as sorted neighbor lists.
class BlockGraph {
 public:
  /// Validates and builds. Intra-block peripheral links are implied by the
  /// clique property and are added when missing from `peripheral_edges`.
  static BlockGraph from_edges(std::vector<BlockSize> sizes,
                               std::vector<PeripheralEdge> peripheral_edges);

  int block_count() const { return static_cast<int>(sizes_.size()); }
  int node_count() const { return static_cast<int>(info_.size()); }
  const std::vector<BlockSize>& block_sizes() const { return sizes_; }
  const BlockSize& block_size(int block) const { return sizes_.at(static_cast<size_t>(block)); }
  int class_size(int block, NodeClass cls) const;

  int first_node(int block) const { return offsets_.at(static_cast<size_t>(block)); }
  int first_node(int block, NodeClass cls) const;
  const NodeInfo& info(int node) const;
  bool is_peripheral(int node) const { return info(node).cls == NodeClass::kPeripheral; }

  /// Peripheral neighbors of a peripheral node (all blocks, sorted). Empty
  /// for central nodes.
  std::span<const int> peripheral_neighbors(int node) const;

  /// M_i^n: number of block-i peripherals adjacent to peripheral node n. For
  /// i equal to n's own block this is N_i^p - 1.
  int cross_count(int node, int block) const;

  int degree(int node) const;
  int peripheral_count() const { return peripheral_total_; }

  /// True when every pair of peripheral nodes is adjacent.
  bool complete_peripheral() const { return complete_; }

  /// Canonical edge list: smaller id first, lexicographic order.
  std::vector<PeripheralEdge> peripheral_edges() const;

  nlohmann::json to_json() const;
  static BlockGraph from_json(const nlohmann::json& j);

  friend bool operator==(const BlockGraph& a, const BlockGraph& b) {
    return a.sizes_ == b.sizes_ && a.adjacency_ == b.adjacency_;
  }

 private:
  BlockGraph() = default;

  std::vector<BlockSize> sizes_;
  std::vector<int> offsets_;
  std::vector<NodeInfo> info_;
  // Indexed by node id; empty for central nodes.
  std::vector<std::vector<int>> adjacency_;
  // cross_counts_[node * r + block] = M_block^node for peripheral nodes.
  std::vector<int> cross_counts_;
  int peripheral_total_ = 0;
  bool complete_ = false;
};

/// All peripherals adjacent to each other.
BlockGraph build_complete_peripheral(const std::vector<BlockSize>& sizes);

/// Each peripheral of block j links to round_half_up(f[j][i] * N_i^p)
/// peripherals of every foreign block i, spread evenly so the design is
/// biregular. Diagonal entries of `fractions` are ignored.
BlockGraph build_regular_peripheral(const std::vector<BlockSize>& sizes,
                                    const std::vector<std::vector<double>>& fractions);

/// Same fraction for every ordered pair of blocks.
BlockGraph build_regular_peripheral(const std::vector<BlockSize>& sizes, double fraction);

/// Shares (N_j^c, M_1^n, ..., N_j^p, ..., M_r^n) / (deg(n)+1) for a peripheral
/// node n of block j. Index 0 is the central share, index 1+i the share of
/// block i's peripherals. The last entry is 1 minus the others.
std::vector<double> neighborhood_proportions(const BlockGraph& graph, int node);

/// Limit proportions the mean-field system is parameterized by.
struct ProportionTargets {
  std::vector<double> p_c;
  std::vector<double> p_p;
  std::vector<double> alpha_c;
  std::vector<std::vector<double>> q;  // q[j][i]
  std::vector<double> alpha;

  int block_count() const { return static_cast<int>(p_c.size()); }

  /// Throws kInvalidConfiguration naming the offending block.
  void validate() const;

  /// Finite-N ratios of `graph`; peripheral ratios are averaged over the
  /// block's peripheral nodes (exact for regular designs).
  static ProportionTargets from_graph(const BlockGraph& graph);

  /// Limits for a complete peripheral subgraph with block weights `alpha`
  /// and central fractions `p_c`.
  static ProportionTargets complete_limit(const std::vector<double>& alpha,
                                          const std::vector<double>& p_c);

  nlohmann::json to_json() const;
  static ProportionTargets from_json(const nlohmann::json& j);
};

struct RegularityReport {
  double own_peripheral = 0.0;  // max |N_j^p/(deg+1) - q_jj|
  double central_share = 0.0;   // max |N_j^c/(deg+1) - alpha_j^c|
  double cross = 0.0;           // max |M_i^n/(deg+1) - q_ji|
  double block_split = 0.0;     // max |N_j^c/N_j - p_j^c|

  double max() const;
};

RegularityReport check_regularity(const BlockGraph& graph, const ProportionTargets& targets);

/// Complete-peripheral graph with N_j = alpha_j * total and
/// N_j^c = p_c[j] * N_j; throws unless both are integers.
BlockGraph complete_graph_for_total(int total, const std::vector<double>& alpha,
                                    const std::vector<double>& p_c);

}  // namespace blockmf
