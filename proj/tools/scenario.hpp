#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blockmf/block_graph.hpp"
#include "blockmf/measure.hpp"
#include "blockmf/rate_model.hpp"

namespace blockmf::cli {

/// How a graph family builds the peripheral subgraph for a given N.
struct FamilySpec {
  std::vector<double> alpha;
  std::vector<double> p_c;
  /// Empty for complete peripheral subgraphs, else the cross-block fraction.
  std::optional<double> fraction;

  BlockGraph build(int total) const;
};

struct TaggedNode {
  int block = 0;
  NodeClass cls = NodeClass::kCentral;
  int index = 0;
};

struct PicardSettings {
  double tol = 1e-8;
  int max_iter = 50;
};

/// Parsed and validated scenario file. Relative paths are resolved against
/// the scenario's directory.
struct Scenario {
  std::filesystem::path source;
  std::uint64_t seed = 0;
  std::optional<BlockGraph> graph;
  RateModel model;
  std::optional<ProportionTargets> targets;
  std::optional<FamilySpec> family;
  std::vector<Measure> init;
  double horizon = 0.0;
  std::optional<double> dt;
  int grid = 11;
  std::optional<int> replicas;
  std::vector<int> n_list;
  std::vector<TaggedNode> tagged;
  PicardSettings picard;
  std::optional<std::filesystem::path> flow;
  std::filesystem::path output = ".";
  double oracle_tol = 1e-10;

  int blocks() const;
  /// Declared targets, else the graph's own proportions.
  ProportionTargets limit_targets() const;
  /// Declared family, else the proportions of the graph with the graph's
  /// peripheral design (complete or not).
  FamilySpec graph_family() const;
  const BlockGraph& require_graph(const char* command) const;
  double step() const;
};

/// Reads and validates a scenario; throws blockmf::Error(kInvalidConfiguration)
/// with the line or field at fault.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace blockmf::cli
