#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "blockmf/block_graph.hpp"
#include "blockmf/measure.hpp"
#include "blockmf/rate_model.hpp"

namespace blockmf {

/// Largest product state space the oracle accepts.
inline constexpr std::size_t kOracleMaxStates = 4096;

/// Index of a configuration: sum_n colors[n] * K^n.
std::size_t encode_configuration(std::span<const int> colors, int k);
std::vector<int> decode_configuration(std::size_t index, int nodes, int k);

/// Law of independent node colors drawn from the per-class measures.
std::vector<double> product_distribution(const BlockGraph& graph, std::span<const Measure> init);

/// Transient law of the full N-particle chain at time `horizon`, obtained by
/// uniformization of the generator built from a neighbor-by-neighbor scan of
/// every configuration. The truncated Poisson tail is below `tol`.
std::vector<double> master_equation_oracle(const BlockGraph& graph, const RateModel& model,
                                           std::span<const double> init_dist, double horizon,
                                           double tol = 1e-10);

Measure node_marginal(std::span<const double> dist, int node, int nodes, int k);

/// Expected empirical vector under `dist`.
std::vector<Measure> expected_empirical(const BlockGraph& graph, std::span<const double> dist, int k);

}  // namespace blockmf
