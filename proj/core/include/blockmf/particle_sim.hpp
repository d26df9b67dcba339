#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "blockmf/block_graph.hpp"
#include "blockmf/measure.hpp"
#include "blockmf/rate_model.hpp"
#include "blockmf/rng.hpp"

namespace blockmf {

/// Component index of (block, class) inside 2r-long vectors.
inline int component_index(int block, NodeClass cls) { return 2 * block + static_cast<int>(cls); }

/// (mu_1^c, mu_1^p, ..., mu_r^c, mu_r^p).
struct EmpiricalVector {
  std::vector<Measure> components;

  const Measure& at(int block, NodeClass cls) const {
    return components[static_cast<size_t>(component_index(block, cls))];
  }
  int block_count() const { return static_cast<int>(components.size() / 2); }
};

/// Colors of all N nodes plus per-(block, class) color counts kept in sync.
class SystemState {
 public:
  SystemState() = default;
  SystemState(const BlockGraph& graph, int colors, std::vector<int> node_colors);

  int colors() const { return colors_; }
  int node_count() const { return static_cast<int>(node_colors_.size()); }
  int color(int node) const { return node_colors_[static_cast<size_t>(node)]; }
  const std::vector<int>& node_colors() const { return node_colors_; }

  int count(int block, NodeClass cls, int color) const {
    return counts_[static_cast<size_t>(component_index(block, cls) * colors_ + color)];
  }
  std::span<const int> counts(int block, NodeClass cls) const {
    return std::span<const int>(counts_).subspan(static_cast<size_t>(component_index(block, cls) * colors_),
                                                 static_cast<size_t>(colors_));
  }

  void recolor(const BlockGraph& graph, int node, int color);

  /// True when the cached counts match a recount from the node colors.
  bool counts_consistent(const BlockGraph& graph) const;

  EmpiricalVector empirical(const BlockGraph& graph) const;

  friend bool operator==(const SystemState& a, const SystemState& b) {
    return a.colors_ == b.colors_ && a.node_colors_ == b.node_colors_ && a.counts_ == b.counts_;
  }

 private:
  int colors_ = 0;
  std::vector<int> node_colors_;
  std::vector<int> counts_;
};

/// Draws every node's color independently from its class's initial measure.
/// `init` holds 2r measures in component order.
SystemState sample_initial_state(const BlockGraph& graph, std::span<const Measure> init, Philox& rng);

struct Event {
  double time = 0.0;
  int node = 0;
  int from = 0;
  int to = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

struct Trajectory {
  SystemState initial;
  std::vector<Event> events;
  double horizon = 0.0;

  /// Number of jumps of every node over [0, horizon].
  std::vector<int> jump_counts() const;
};

/// Local empirical measure of a node split into its groups.
/// Central node of block j: parts (mu_j^c, mu_j^p), weights (N_j^c/N_j, N_j^p/N_j).
/// Peripheral node: parts (mu_j^c, nbrs in block 1, ..., mu_j^p, ..., nbrs in
/// block r), weights from neighborhood_proportions. Groups with no member
/// carry weight 0 and an all-zero part.
struct LocalEmpirical {
  std::vector<Measure> parts;
  std::vector<double> weights;
  Measure combined;
};

/// Computed by scanning the node's neighborhood directly.
LocalEmpirical local_empirical(const SystemState& state, const BlockGraph& graph, int node);

struct SimulationOptions {
  /// Rebuild every rate from scratch after this many events.
  int full_refresh_interval = 10000;
  /// Recount class counts after every event and fail on mismatch.
  bool verify_counts = false;
};

/// Direct-method (Gillespie) simulator of the N-particle chain. Nodes of a
/// class that share a local measure are aggregated into one rate group;
/// peripheral nodes get individual groups when the peripheral subgraph is
/// not complete.
class Simulator {
 public:
  Simulator(const BlockGraph& graph, const RateModel& model, SystemState initial, Philox rng,
            SimulationOptions options = {});
  ~Simulator();
  Simulator(Simulator&&) noexcept;
  Simulator& operator=(Simulator&&) noexcept;

  /// Performs the next event if it happens at or before `t_end`.
  std::optional<Event> step(double t_end);
  /// Runs every event up to and including `t_end`; returns how many fired.
  std::int64_t advance_to(double t_end);

  const SystemState& state() const;
  double time() const;
  double total_rate() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Trajectory simulate(const BlockGraph& graph, const RateModel& model, SystemState initial, double horizon,
                    Philox rng, SimulationOptions options = {});

Trajectory simulate(const BlockGraph& graph, const RateModel& model, SystemState initial, double horizon,
                    std::uint64_t seed);

/// Empirical vectors at each grid time without storing the event list.
std::vector<EmpiricalVector> simulate_on_grid(const BlockGraph& graph, const RateModel& model,
                                              SystemState initial, std::span<const double> grid,
                                              Philox rng);

/// Value at t includes every event with time <= t (cadlag evaluation).
std::vector<EmpiricalVector> empirical_process(const Trajectory& trajectory, const BlockGraph& graph,
                                               std::span<const double> grid);

/// Uniform grid of `points` >= 2 times on [0, horizon].
std::vector<double> uniform_grid(double horizon, int points);

}  // namespace blockmf
