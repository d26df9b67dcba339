#include "blockmf/block_graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "blockmf/error.hpp"

namespace blockmf {
namespace {

constexpr double kProportionTol = 1e-9;

void check_sizes(const std::vector<BlockSize>& sizes) {
  require(!sizes.empty(), ErrorKind::kInvalidConfiguration, "graph needs at least one block");
  for (size_t j = 0; j < sizes.size(); ++j) {
    require(sizes[j].central >= 1 && sizes[j].peripheral >= 1, ErrorKind::kInvalidConfiguration,
            fmt::format("block {} needs at least one central and one peripheral node (got {}, {})",
                        j, sizes[j].central, sizes[j].peripheral));
  }
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

}  // namespace

BlockGraph BlockGraph::from_edges(std::vector<BlockSize> sizes,
                                  std::vector<PeripheralEdge> peripheral_edges) {
  check_sizes(sizes);
  BlockGraph g;
  g.sizes_ = std::move(sizes);
  const int r = g.block_count();
  int offset = 0;
  for (int j = 0; j < r; ++j) {
    g.offsets_.push_back(offset);
    const auto& s = g.sizes_[static_cast<size_t>(j)];
    for (int k = 0; k < s.central; ++k) g.info_.push_back({j, NodeClass::kCentral, k});
    for (int k = 0; k < s.peripheral; ++k) g.info_.push_back({j, NodeClass::kPeripheral, k});
    offset += s.total();
    g.peripheral_total_ += s.peripheral;
  }

  const int n_nodes = g.node_count();
  std::vector<std::set<int>> adj(static_cast<size_t>(n_nodes));
  for (const auto& [a, b] : peripheral_edges) {
    require(a >= 0 && a < n_nodes && b >= 0 && b < n_nodes, ErrorKind::kInvalidConfiguration,
            fmt::format("edge ({}, {}) references a node outside [0, {})", a, b, n_nodes));
    require(a != b, ErrorKind::kInvalidConfiguration, fmt::format("self-loop on node {}", a));
    require(g.is_peripheral(a) && g.is_peripheral(b), ErrorKind::kInvalidConfiguration,
            fmt::format("edge ({}, {}) touches a central node", a, b));
    adj[static_cast<size_t>(a)].insert(b);
    adj[static_cast<size_t>(b)].insert(a);
  }
  // Clique property inside each block.
  for (int j = 0; j < r; ++j) {
    const int first = g.first_node(j, NodeClass::kPeripheral);
    const int count = g.sizes_[static_cast<size_t>(j)].peripheral;
    for (int a = first; a < first + count; ++a) {
      for (int b = first; b < first + count; ++b) {
        if (a != b) adj[static_cast<size_t>(a)].insert(b);
      }
    }
  }

  g.adjacency_.resize(static_cast<size_t>(n_nodes));
  g.cross_counts_.assign(static_cast<size_t>(n_nodes * r), 0);
  g.complete_ = true;
  for (int n = 0; n < n_nodes; ++n) {
    const auto& nbrs = adj[static_cast<size_t>(n)];
    g.adjacency_[static_cast<size_t>(n)].assign(nbrs.begin(), nbrs.end());
    for (int m : nbrs) ++g.cross_counts_[static_cast<size_t>(n * r + g.info(m).block)];
    if (g.is_peripheral(n) && static_cast<int>(nbrs.size()) != g.peripheral_total_ - 1) {
      g.complete_ = false;
    }
  }
  return g;
}

int BlockGraph::class_size(int block, NodeClass cls) const {
  const auto& s = block_size(block);
  return cls == NodeClass::kCentral ? s.central : s.peripheral;
}

int BlockGraph::first_node(int block, NodeClass cls) const {
  return first_node(block) + (cls == NodeClass::kCentral ? 0 : block_size(block).central);
}

const NodeInfo& BlockGraph::info(int node) const {
  require(node >= 0 && node < node_count(), ErrorKind::kInvalidArgument,
          fmt::format("node {} outside [0, {})", node, node_count()));
  return info_[static_cast<size_t>(node)];
}

std::span<const int> BlockGraph::peripheral_neighbors(int node) const {
  info(node);
  return adjacency_[static_cast<size_t>(node)];
}

int BlockGraph::cross_count(int node, int block) const {
  require(is_peripheral(node), ErrorKind::kWrongClass,
          fmt::format("node {} is central; cross counts are defined for peripherals", node));
  require(block >= 0 && block < block_count(), ErrorKind::kInvalidArgument,
          fmt::format("block {} outside [0, {})", block, block_count()));
  return cross_counts_[static_cast<size_t>(node * block_count() + block)];
}

int BlockGraph::degree(int node) const {
  const auto& ni = info(node);
  const int own = block_size(ni.block).total() - 1;
  if (ni.cls == NodeClass::kCentral) return own;
  int foreign = 0;
  for (int i = 0; i < block_count(); ++i) {
    if (i != ni.block) foreign += cross_counts_[static_cast<size_t>(node * block_count() + i)];
  }
  return own + foreign;
}

std::vector<PeripheralEdge> BlockGraph::peripheral_edges() const {
  std::vector<PeripheralEdge> edges;
  for (int n = 0; n < node_count(); ++n) {
    for (int m : adjacency_[static_cast<size_t>(n)]) {
      if (n < m) edges.emplace_back(n, m);
    }
  }
  return edges;  // already lexicographic: n ascending, neighbors sorted
}

nlohmann::json BlockGraph::to_json() const {
  nlohmann::json j;
  j["blocks"] = nlohmann::json::array();
  for (const auto& s : sizes_) {
    j["blocks"].push_back({{"central", s.central}, {"peripheral", s.peripheral}});
  }
  j["peripheral_edges"] = nlohmann::json::array();
  for (const auto& [a, b] : peripheral_edges()) j["peripheral_edges"].push_back({a, b});
  return j;
}

BlockGraph BlockGraph::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("blocks"), ErrorKind::kInvalidConfiguration,
          "graph object needs a \"blocks\" array");
  for (const auto& [key, _] : j.items()) {
    require(key == "blocks" || key == "peripheral_edges", ErrorKind::kInvalidConfiguration,
            fmt::format("unknown graph field \"{}\"", key));
  }
  std::vector<BlockSize> sizes;
  for (const auto& b : j.at("blocks")) {
    sizes.push_back({b.at("central").get<int>(), b.at("peripheral").get<int>()});
  }
  std::vector<PeripheralEdge> edges;
  if (j.contains("peripheral_edges")) {
    for (const auto& e : j.at("peripheral_edges")) {
      require(e.is_array() && e.size() == 2, ErrorKind::kInvalidConfiguration,
              "peripheral edge must be a pair of node ids");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
  }
  return from_edges(std::move(sizes), std::move(edges));
}

BlockGraph build_complete_peripheral(const std::vector<BlockSize>& sizes) {
  check_sizes(sizes);
  std::vector<int> peripherals;
  int offset = 0;
  for (const auto& s : sizes) {
    for (int k = 0; k < s.peripheral; ++k) peripherals.push_back(offset + s.central + k);
    offset += s.total();
  }
  std::vector<PeripheralEdge> edges;
  for (size_t a = 0; a < peripherals.size(); ++a) {
    for (size_t b = a + 1; b < peripherals.size(); ++b) edges.emplace_back(peripherals[a], peripherals[b]);
  }
  return BlockGraph::from_edges(sizes, std::move(edges));
}

BlockGraph build_regular_peripheral(const std::vector<BlockSize>& sizes,
                                    const std::vector<std::vector<double>>& fractions) {
  check_sizes(sizes);
  const size_t r = sizes.size();
  require(fractions.size() == r, ErrorKind::kInvalidConfiguration,
          fmt::format("fraction matrix has {} rows for {} blocks", fractions.size(), r));
  std::vector<int> first_peripheral(r);
  int offset = 0;
  for (size_t j = 0; j < r; ++j) {
    require(fractions[j].size() == r, ErrorKind::kInvalidConfiguration,
            fmt::format("fraction row {} has {} entries for {} blocks", j, fractions[j].size(), r));
    first_peripheral[j] = offset + sizes[j].central;
    offset += sizes[j].total();
  }

  std::vector<PeripheralEdge> edges;
  for (size_t j = 0; j < r; ++j) {
    for (size_t i = j + 1; i < r; ++i) {
      const double f_ji = fractions[j][i];
      const double f_ij = fractions[i][j];
      require(f_ji > 0.0 && f_ji <= 1.0 && f_ij > 0.0 && f_ij <= 1.0,
              ErrorKind::kInvalidConfiguration,
              fmt::format("cross-degree fractions between blocks {} and {} must lie in (0, 1]", j, i));
      const int pj = sizes[j].peripheral;
      const int pi = sizes[i].peripheral;
      const int m_ji = round_half_up(f_ji * pi);  // links from each j-peripheral into block i
      const int m_ij = round_half_up(f_ij * pj);
      require(m_ji >= 1 && m_ij >= 1 && m_ji <= pi && m_ij <= pj && pj * m_ji == pi * m_ij,
              ErrorKind::kInvalidConfiguration,
              fmt::format("blocks {} and {}: requested degrees {} and {} admit no regular design "
                          "({} * {} != {} * {})",
                          j, i, m_ji, m_ij, pj, m_ji, pi, m_ij));
      // Stub k joins j-peripheral k / m_ji to i-peripheral k mod pi; every
      // i-peripheral then receives exactly m_ij distinct partners.
      for (int k = 0; k < pj * m_ji; ++k) {
        edges.emplace_back(first_peripheral[j] + k / m_ji, first_peripheral[i] + k % pi);
      }
    }
  }
  return BlockGraph::from_edges(sizes, std::move(edges));
}

BlockGraph build_regular_peripheral(const std::vector<BlockSize>& sizes, double fraction) {
  return build_regular_peripheral(
      sizes, std::vector<std::vector<double>>(sizes.size(), std::vector<double>(sizes.size(), fraction)));
}

std::vector<double> neighborhood_proportions(const BlockGraph& graph, int node) {
  const auto& ni = graph.info(node);
  require(ni.cls == NodeClass::kPeripheral, ErrorKind::kWrongClass,
          fmt::format("node {} is central; neighborhood proportions need a peripheral node", node));
  const int r = graph.block_count();
  const double denom = static_cast<double>(graph.degree(node) + 1);
  std::vector<double> shares(static_cast<size_t>(r + 1));
  shares[0] = graph.block_size(ni.block).central / denom;
  for (int i = 0; i < r; ++i) {
    const int count = i == ni.block ? graph.block_size(i).peripheral : graph.cross_count(node, i);
    shares[static_cast<size_t>(1 + i)] = count / denom;
  }
  double head = 0.0;
  for (size_t k = 0; k + 1 < shares.size(); ++k) head += shares[k];
  shares.back() = 1.0 - head;
  return shares;
}

void ProportionTargets::validate() const {
  const size_t r = p_c.size();
  require(r >= 1, ErrorKind::kInvalidConfiguration, "targets need at least one block");
  require(p_p.size() == r && alpha_c.size() == r && q.size() == r && alpha.size() == r,
          ErrorKind::kInvalidConfiguration, "target vectors must all have one entry per block");
  double alpha_sum = 0.0;
  for (size_t j = 0; j < r; ++j) {
    require(in_open_unit(p_c[j]) && in_open_unit(p_p[j]), ErrorKind::kInvalidConfiguration,
            fmt::format("block {}: p_c and p_p must lie in (0, 1)", j));
    require(std::abs(p_c[j] + p_p[j] - 1.0) <= kProportionTol, ErrorKind::kInvalidConfiguration,
            fmt::format("block {}: p_c + p_p = {} (must be 1)", j, p_c[j] + p_p[j]));
    require(q[j].size() == r, ErrorKind::kInvalidConfiguration,
            fmt::format("block {}: q row has {} entries", j, q[j].size()));
    require(in_open_unit(alpha_c[j]), ErrorKind::kInvalidConfiguration,
            fmt::format("block {}: alpha_c must lie in (0, 1)", j));
    double row = alpha_c[j];
    for (size_t i = 0; i < r; ++i) {
      require(in_open_unit(q[j][i]), ErrorKind::kInvalidConfiguration,
              fmt::format("block {}: q[{}] must lie in (0, 1)", j, i));
      row += q[j][i];
    }
    require(std::abs(row - 1.0) <= kProportionTol, ErrorKind::kInvalidConfiguration,
            fmt::format("block {}: alpha_c + sum(q) = {} (must be 1)", j, row));
    require(alpha[j] > 0.0 && alpha[j] <= 1.0, ErrorKind::kInvalidConfiguration,
            fmt::format("block {}: alpha must lie in (0, 1]", j));
    alpha_sum += alpha[j];
  }
  require(std::abs(alpha_sum - 1.0) <= kProportionTol, ErrorKind::kInvalidConfiguration,
          fmt::format("block weights alpha sum to {} (must be 1)", alpha_sum));
}

ProportionTargets ProportionTargets::from_graph(const BlockGraph& graph) {
  const int r = graph.block_count();
  ProportionTargets t;
  t.q.assign(static_cast<size_t>(r), std::vector<double>(static_cast<size_t>(r), 0.0));
  const double total = graph.node_count();
  for (int j = 0; j < r; ++j) {
    const auto& s = graph.block_size(j);
    t.p_c.push_back(static_cast<double>(s.central) / s.total());
    t.p_p.push_back(static_cast<double>(s.peripheral) / s.total());
    t.alpha.push_back(s.total() / total);
    double ac = 0.0;
    const int first = graph.first_node(j, NodeClass::kPeripheral);
    for (int n = first; n < first + s.peripheral; ++n) {
      const auto shares = neighborhood_proportions(graph, n);
      ac += shares[0];
      for (int i = 0; i < r; ++i) t.q[static_cast<size_t>(j)][static_cast<size_t>(i)] += shares[static_cast<size_t>(1 + i)];
    }
    t.alpha_c.push_back(ac / s.peripheral);
    for (auto& v : t.q[static_cast<size_t>(j)]) v /= s.peripheral;
  }
  return t;
}

ProportionTargets ProportionTargets::complete_limit(const std::vector<double>& alpha,
                                                    const std::vector<double>& p_c) {
  require(alpha.size() == p_c.size() && !alpha.empty(), ErrorKind::kInvalidConfiguration,
          "alpha and p_c must have one entry per block");
  const size_t r = alpha.size();
  ProportionTargets t;
  t.alpha = alpha;
  t.p_c = p_c;
  double peripheral_mass = 0.0;
  for (size_t j = 0; j < r; ++j) {
    t.p_p.push_back(1.0 - p_c[j]);
    peripheral_mass += alpha[j] * (1.0 - p_c[j]);
  }
  for (size_t j = 0; j < r; ++j) {
    const double denom = alpha[j] * p_c[j] + peripheral_mass;
    t.alpha_c.push_back(alpha[j] * p_c[j] / denom);
    std::vector<double> row;
    for (size_t i = 0; i < r; ++i) row.push_back(alpha[i] * (1.0 - p_c[i]) / denom);
    t.q.push_back(std::move(row));
  }
  return t;
}

nlohmann::json ProportionTargets::to_json() const {
  return {{"p_c", p_c}, {"p_p", p_p}, {"alpha_c", alpha_c}, {"q", q}, {"alpha", alpha}};
}

ProportionTargets ProportionTargets::from_json(const nlohmann::json& j) {
  for (const auto& [key, _] : j.items()) {
    require(key == "p_c" || key == "p_p" || key == "alpha_c" || key == "q" || key == "alpha",
            ErrorKind::kInvalidConfiguration, fmt::format("unknown targets field \"{}\"", key));
  }
  ProportionTargets t;
  t.p_c = j.at("p_c").get<std::vector<double>>();
  t.p_p = j.at("p_p").get<std::vector<double>>();
  t.alpha_c = j.at("alpha_c").get<std::vector<double>>();
  t.q = j.at("q").get<std::vector<std::vector<double>>>();
  t.alpha = j.at("alpha").get<std::vector<double>>();
  return t;
}

double RegularityReport::max() const {
  return std::max({own_peripheral, central_share, cross, block_split});
}

RegularityReport check_regularity(const BlockGraph& graph, const ProportionTargets& targets) {
  const int r = graph.block_count();
  require(targets.block_count() == r && targets.q.size() == static_cast<size_t>(r),
          ErrorKind::kInvalidArgument,
          fmt::format("targets describe {} blocks, graph has {}", targets.block_count(), r));
  RegularityReport rep;
  for (int j = 0; j < r; ++j) {
    const auto ju = static_cast<size_t>(j);
    const auto& s = graph.block_size(j);
    rep.block_split = std::max(rep.block_split,
                               std::abs(static_cast<double>(s.central) / s.total() - targets.p_c[ju]));
    const int first = graph.first_node(j, NodeClass::kPeripheral);
    for (int n = first; n < first + s.peripheral; ++n) {
      const double denom = graph.degree(n) + 1.0;
      rep.own_peripheral = std::max(rep.own_peripheral, std::abs(s.peripheral / denom - targets.q[ju][ju]));
      rep.central_share = std::max(rep.central_share, std::abs(s.central / denom - targets.alpha_c[ju]));
      for (int i = 0; i < r; ++i) {
        if (i == j) continue;
        rep.cross = std::max(rep.cross, std::abs(graph.cross_count(n, i) / denom -
                                                 targets.q[ju][static_cast<size_t>(i)]));
      }
    }
  }
  return rep;
}

BlockGraph complete_graph_for_total(int total, const std::vector<double>& alpha,
                                    const std::vector<double>& p_c) {
  require(alpha.size() == p_c.size() && !alpha.empty(), ErrorKind::kInvalidConfiguration,
          "alpha and p_c must have one entry per block");
  std::vector<BlockSize> sizes;
  int assigned = 0;
  for (size_t j = 0; j < alpha.size(); ++j) {
    const double nj = alpha[j] * total;
    const int nj_int = static_cast<int>(std::lround(nj));
    const double nc = p_c[j] * nj_int;
    const int nc_int = static_cast<int>(std::lround(nc));
    require(std::abs(nj - nj_int) < 1e-9 && std::abs(nc - nc_int) < 1e-9,
            ErrorKind::kInvalidConfiguration,
            fmt::format("N = {} is not realizable with alpha[{}] = {} and p_c[{}] = {}", total, j,
                        alpha[j], j, p_c[j]));
    sizes.push_back({nc_int, nj_int - nc_int});
    assigned += nj_int;
  }
  require(assigned == total, ErrorKind::kInvalidConfiguration,
          fmt::format("block sizes sum to {} instead of N = {}", assigned, total));
  return build_complete_peripheral(sizes);
}

}  // namespace blockmf
