#include "blockmf/particle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "blockmf/error.hpp"

namespace blockmf {

// ---------------------------------------------------------------------------
// SystemState

SystemState::SystemState(const BlockGraph& graph, int colors, std::vector<int> node_colors)
    : colors_(colors), node_colors_(std::move(node_colors)) {
  require(colors >= 1, ErrorKind::kInvalidArgument, "state needs at least one color");
  require(static_cast<int>(node_colors_.size()) == graph.node_count(), ErrorKind::kInvalidArgument,
          fmt::format("state has {} colors for {} nodes", node_colors_.size(), graph.node_count()));
  counts_.assign(static_cast<size_t>(2 * graph.block_count() * colors), 0);
  for (int n = 0; n < graph.node_count(); ++n) {
    const int c = node_colors_[static_cast<size_t>(n)];
    require(c >= 0 && c < colors, ErrorKind::kInvalidArgument,
            fmt::format("node {} has color {} outside [0, {})", n, c, colors));
    const auto& ni = graph.info(n);
    ++counts_[static_cast<size_t>(component_index(ni.block, ni.cls) * colors + c)];
  }
}

void SystemState::recolor(const BlockGraph& graph, int node, int color) {
  const auto& ni = graph.info(node);
  auto& slot = node_colors_[static_cast<size_t>(node)];
  const int base = component_index(ni.block, ni.cls) * colors_;
  --counts_[static_cast<size_t>(base + slot)];
  ++counts_[static_cast<size_t>(base + color)];
  slot = color;
}

bool SystemState::counts_consistent(const BlockGraph& graph) const {
  return SystemState(graph, colors_, node_colors_).counts_ == counts_;
}

EmpiricalVector SystemState::empirical(const BlockGraph& graph) const {
  EmpiricalVector v;
  for (int j = 0; j < graph.block_count(); ++j) {
    for (NodeClass cls : {NodeClass::kCentral, NodeClass::kPeripheral}) {
      const double size = graph.class_size(j, cls);
      Measure m(static_cast<size_t>(colors_));
      for (int z = 0; z < colors_; ++z) m[static_cast<size_t>(z)] = count(j, cls, z) / size;
      v.components.push_back(std::move(m));
    }
  }
  return v;
}

SystemState sample_initial_state(const BlockGraph& graph, std::span<const Measure> init, Philox& rng) {
  require(static_cast<int>(init.size()) == 2 * graph.block_count(), ErrorKind::kInvalidArgument,
          fmt::format("need {} initial measures, got {}", 2 * graph.block_count(), init.size()));
  const auto k = init.front().size();
  for (const auto& m : init) {
    require(m.size() == k, ErrorKind::kInvalidArgument, "initial measures must share one color count");
    m.require_probability(1e-9);
  }
  std::vector<int> colors(static_cast<size_t>(graph.node_count()));
  for (int n = 0; n < graph.node_count(); ++n) {
    const auto& ni = graph.info(n);
    const auto& m = init[static_cast<size_t>(component_index(ni.block, ni.cls))];
    const double u = rng.uniform();
    double acc = 0.0;
    int c = static_cast<int>(k) - 1;
    for (size_t z = 0; z < k; ++z) {
      acc += m[z];
      if (u < acc) {
        c = static_cast<int>(z);
        break;
      }
    }
    while (m[static_cast<size_t>(c)] == 0.0 && c > 0) --c;  // roundoff at the top of the CDF
    colors[static_cast<size_t>(n)] = c;
  }
  return SystemState(graph, static_cast<int>(k), std::move(colors));
}

std::vector<int> Trajectory::jump_counts() const {
  std::vector<int> counts(static_cast<size_t>(initial.node_count()), 0);
  for (const auto& e : events) ++counts[static_cast<size_t>(e.node)];
  return counts;
}

LocalEmpirical local_empirical(const SystemState& state, const BlockGraph& graph, int node) {
  const auto& ni = graph.info(node);
  const auto k = static_cast<size_t>(state.colors());
  const int r = graph.block_count();
  auto class_measure = [&](int block, NodeClass cls) {
    Measure m(k);
    const int first = graph.first_node(block, cls);
    const int size = graph.class_size(block, cls);
    for (int n = first; n < first + size; ++n) m[static_cast<size_t>(state.color(n))] += 1.0;
    for (size_t z = 0; z < k; ++z) m[z] /= size;
    return m;
  };

  LocalEmpirical out;
  if (ni.cls == NodeClass::kCentral) {
    const auto& s = graph.block_size(ni.block);
    out.parts = {class_measure(ni.block, NodeClass::kCentral), class_measure(ni.block, NodeClass::kPeripheral)};
    out.weights = {static_cast<double>(s.central) / s.total(), static_cast<double>(s.peripheral) / s.total()};
  } else {
    out.weights = neighborhood_proportions(graph, node);
    out.parts.push_back(class_measure(ni.block, NodeClass::kCentral));
    std::vector<Measure> by_block(static_cast<size_t>(r), Measure(k));
    std::vector<int> sizes(static_cast<size_t>(r), 0);
    for (int m : graph.peripheral_neighbors(node)) {
      const int b = graph.info(m).block;
      if (b == ni.block) continue;
      by_block[static_cast<size_t>(b)][static_cast<size_t>(state.color(m))] += 1.0;
      ++sizes[static_cast<size_t>(b)];
    }
    for (int i = 0; i < r; ++i) {
      if (i == ni.block) {
        out.parts.push_back(class_measure(i, NodeClass::kPeripheral));
        continue;
      }
      auto& m = by_block[static_cast<size_t>(i)];
      if (sizes[static_cast<size_t>(i)] > 0) {
        for (size_t z = 0; z < k; ++z) m[z] /= sizes[static_cast<size_t>(i)];
      }
      out.parts.push_back(std::move(m));
    }
  }
  out.combined = Measure(k);
  for (size_t g = 0; g < out.parts.size(); ++g) {
    for (size_t z = 0; z < k; ++z) out.combined[z] += out.weights[g] * out.parts[g][z];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulator

namespace {

/// Binary tree of partial sums; internal nodes are recomputed from their
/// children on every update so totals never accumulate drift.
class SumTree {
 public:
  explicit SumTree(size_t leaves) {
    while (width_ < leaves) width_ *= 2;
    tree_.assign(2 * width_, 0.0);
  }

  void set(size_t leaf, double w) {
    size_t k = leaf + width_;
    tree_[k] = w;
    for (k >>= 1; k >= 1; k >>= 1) tree_[k] = tree_[2 * k] + tree_[2 * k + 1];
  }

  double total() const { return tree_[1]; }

  size_t sample(double target) const {
    size_t k = 1;
    while (k < width_) {
      const double left = tree_[2 * k];
      if (target < left || tree_[2 * k + 1] <= 0.0) {
        k = 2 * k;
      } else {
        target -= left;
        k = 2 * k + 1;
      }
    }
    return k - width_;
  }

 private:
  size_t width_ = 1;
  std::vector<double> tree_;
};

struct Group {
  int block = 0;
  NodeClass cls = NodeClass::kCentral;
  int node = -1;  // -1: aggregated over the whole class
  std::vector<double> rates;
  double weight = 0.0;
};

}  // namespace

struct Simulator::Impl {
  const BlockGraph* graph;
  const RateModel* model;
  SystemState state;
  Philox rng;
  SimulationOptions options;
  int k = 0;
  int r = 0;
  int n_edges = 0;
  bool aggregated_peripherals = false;

  std::vector<Group> groups;
  SumTree tree{1};
  std::vector<int> central_group;     // per block
  std::vector<int> peripheral_group;  // per block, -1 when per-node
  std::vector<int> node_group;        // per node, -1 unless per-node peripheral

  // Nodes of each (component, color), for uniform picks inside a group.
  std::vector<std::vector<int>> members;
  std::vector<int> member_pos;
  // Per-node counts of peripheral neighbors by (block, color).
  std::vector<int> nbr_counts;
  // Neighborhood proportions per peripheral node (index by node).
  std::vector<std::vector<double>> proportions;

  std::vector<double> scratch_c, scratch_p;
  std::vector<std::vector<double>> scratch_blocks;

  double time = 0.0;
  std::optional<double> pending;
  std::int64_t since_refresh = 0;

  Impl(const BlockGraph& g, const RateModel& m, SystemState s, Philox rng_in, SimulationOptions opt)
      : graph(&g), model(&m), state(std::move(s)), rng(rng_in), options(opt) {
    m.check_blocks(g.block_count());
    require(state.colors() == m.colors(), ErrorKind::kInvalidArgument,
            fmt::format("state uses {} colors, rate model {}", state.colors(), m.colors()));
    k = m.colors();
    r = g.block_count();
    n_edges = m.color_graph().edge_count();
    aggregated_peripherals = g.complete_peripheral();

    members.resize(static_cast<size_t>(2 * r * k));
    member_pos.resize(static_cast<size_t>(g.node_count()));
    for (int n = 0; n < g.node_count(); ++n) {
      const auto& ni = g.info(n);
      auto& list = members[static_cast<size_t>(component_index(ni.block, ni.cls) * k + state.color(n))];
      member_pos[static_cast<size_t>(n)] = static_cast<int>(list.size());
      list.push_back(n);
    }

    proportions.resize(static_cast<size_t>(g.node_count()));
    for (int n = 0; n < g.node_count(); ++n) {
      if (g.is_peripheral(n)) proportions[static_cast<size_t>(n)] = neighborhood_proportions(g, n);
    }

    node_group.assign(static_cast<size_t>(g.node_count()), -1);
    for (int j = 0; j < r; ++j) {
      central_group.push_back(static_cast<int>(groups.size()));
      groups.push_back({j, NodeClass::kCentral, -1, std::vector<double>(static_cast<size_t>(n_edges)), 0.0});
      if (aggregated_peripherals) {
        peripheral_group.push_back(static_cast<int>(groups.size()));
        groups.push_back({j, NodeClass::kPeripheral, -1, std::vector<double>(static_cast<size_t>(n_edges)), 0.0});
      } else {
        peripheral_group.push_back(-1);
        const int first = g.first_node(j, NodeClass::kPeripheral);
        for (int n = first; n < first + g.block_size(j).peripheral; ++n) {
          node_group[static_cast<size_t>(n)] = static_cast<int>(groups.size());
          groups.push_back({j, NodeClass::kPeripheral, n, std::vector<double>(static_cast<size_t>(n_edges)), 0.0});
        }
      }
    }
    if (!aggregated_peripherals) {
      nbr_counts.assign(static_cast<size_t>(g.node_count() * r * k), 0);
      for (int n = 0; n < g.node_count(); ++n) {
        if (!g.is_peripheral(n)) continue;
        for (int m2 : g.peripheral_neighbors(n)) {
          ++nbr_counts[nbr_index(n, g.info(m2).block, state.color(m2))];
        }
      }
    }
    scratch_c.resize(static_cast<size_t>(k));
    scratch_p.resize(static_cast<size_t>(k));
    scratch_blocks.assign(static_cast<size_t>(r), std::vector<double>(static_cast<size_t>(k)));
    refresh();
  }

  size_t nbr_index(int node, int block, int color) const {
    return static_cast<size_t>((node * r + block) * k + color);
  }

  void fill_class(int block, NodeClass cls, std::vector<double>& out) const {
    const auto counts = state.counts(block, cls);
    const double size = graph->class_size(block, cls);
    for (int z = 0; z < k; ++z) out[static_cast<size_t>(z)] = counts[static_cast<size_t>(z)] / size;
  }

  void check_rate(double v, const Group& grp, int e) const {
    if (!std::isfinite(v) || v < 0.0) {
      fail(ErrorKind::kInternal,
           fmt::format("rate {} on edge {} for block {} class {} at t = {}", v, e, grp.block,
                       class_tag(grp.cls), time));
    }
  }

  void compute(int gi) {
    auto& grp = groups[static_cast<size_t>(gi)];
    const RateSpec& spec = model->spec(grp.block, grp.cls);
    const auto& cg = spec.color_graph();
    const int j = grp.block;
    fill_class(j, NodeClass::kCentral, scratch_c);
    if (grp.cls == NodeClass::kCentral) {
      fill_class(j, NodeClass::kPeripheral, scratch_p);
      const auto& s = graph->block_size(j);
      const double a1 = static_cast<double>(s.central) / s.total();
      const double a2 = static_cast<double>(s.peripheral) / s.total();
      grp.weight = 0.0;
      for (int e = 0; e < n_edges; ++e) {
        const double v = spec.finish(e, a1 * spec.integral_c(e, scratch_c) + a2 * spec.integral_p(e, scratch_p));
        check_rate(v, grp, e);
        grp.rates[static_cast<size_t>(e)] = v;
        grp.weight += state.count(j, NodeClass::kCentral, cg.edge(e).from) * v;
      }
      return;
    }

    const int rep = grp.node >= 0 ? grp.node : graph->first_node(j, NodeClass::kPeripheral);
    const auto& props = proportions[static_cast<size_t>(rep)];
    for (int i = 0; i < r; ++i) {
      auto& m = scratch_blocks[static_cast<size_t>(i)];
      if (i == j || grp.node < 0) {
        fill_class(i, NodeClass::kPeripheral, m);
      } else {
        const int size = graph->cross_count(grp.node, i);
        for (int z = 0; z < k; ++z) {
          m[static_cast<size_t>(z)] = size > 0 ? nbr_counts[nbr_index(grp.node, i, z)] / static_cast<double>(size) : 0.0;
        }
      }
    }
    grp.weight = 0.0;
    for (int e = 0; e < n_edges; ++e) {
      double affine = props[0] * spec.integral_c(e, scratch_c);
      for (int i = 0; i < r; ++i) {
        const double b = props[static_cast<size_t>(1 + i)];
        if (b > 0.0) affine += b * spec.integral_p(e, scratch_blocks[static_cast<size_t>(i)]);
      }
      const double v = spec.finish(e, affine);
      check_rate(v, grp, e);
      grp.rates[static_cast<size_t>(e)] = v;
      if (grp.node < 0) {
        grp.weight += state.count(j, NodeClass::kPeripheral, cg.edge(e).from) * v;
      } else if (cg.edge(e).from == state.color(grp.node)) {
        grp.weight += v;
      }
    }
  }

  void update(int gi) {
    compute(gi);
    tree.set(static_cast<size_t>(gi), groups[static_cast<size_t>(gi)].weight);
  }

  void refresh() {
    tree = SumTree(groups.size());
    for (size_t gi = 0; gi < groups.size(); ++gi) update(static_cast<int>(gi));
    since_refresh = 0;
  }

  int pick_edge(const Group& grp, int node_color) {
    const auto& cg = model->spec(grp.block, grp.cls).color_graph();
    // Weights: count(from) * rate for aggregated groups, rate on out-edges otherwise.
    double total = 0.0;
    for (int e = 0; e < n_edges; ++e) total += edge_weight(grp, e, node_color, cg);
    double target = rng.uniform() * total;
    int chosen = -1;
    for (int e = 0; e < n_edges; ++e) {
      const double w = edge_weight(grp, e, node_color, cg);
      if (w <= 0.0) continue;
      chosen = e;
      if (target < w) break;
      target -= w;
    }
    if (chosen < 0) fail(ErrorKind::kInternal, "selected a rate group with no active edge");
    return chosen;
  }

  double edge_weight(const Group& grp, int e, int node_color, const ColorGraph& cg) const {
    const int from = cg.edge(e).from;
    if (grp.node < 0) return state.count(grp.block, grp.cls, from) * grp.rates[static_cast<size_t>(e)];
    return from == node_color ? grp.rates[static_cast<size_t>(e)] : 0.0;
  }

  void move_member(int node, int comp, int from, int to) {
    auto& src = members[static_cast<size_t>(comp * k + from)];
    const int pos = member_pos[static_cast<size_t>(node)];
    const int last = src.back();
    src[static_cast<size_t>(pos)] = last;
    member_pos[static_cast<size_t>(last)] = pos;
    src.pop_back();
    auto& dst = members[static_cast<size_t>(comp * k + to)];
    member_pos[static_cast<size_t>(node)] = static_cast<int>(dst.size());
    dst.push_back(node);
  }

  Event fire(double t) {
    const size_t gi = tree.sample(rng.uniform() * tree.total());
    const Group& grp = groups[gi];
    int node = grp.node;
    const int e = pick_edge(grp, node >= 0 ? state.color(node) : -1);
    const auto& edge = model->spec(grp.block, grp.cls).color_graph().edge(e);
    if (node < 0) {
      const auto& list = members[static_cast<size_t>(component_index(grp.block, grp.cls) * k + edge.from)];
      node = list[static_cast<size_t>(rng.below(list.size()))];
    }
    const auto& ni = graph->info(node);
    move_member(node, component_index(ni.block, ni.cls), edge.from, edge.to);
    state.recolor(*graph, node, edge.to);
    time = t;

    const int j = ni.block;
    update(central_group[static_cast<size_t>(j)]);
    if (aggregated_peripherals) {
      if (ni.cls == NodeClass::kPeripheral) {
        for (int b = 0; b < r; ++b) update(peripheral_group[static_cast<size_t>(b)]);
      } else {
        update(peripheral_group[static_cast<size_t>(j)]);
      }
    } else {
      if (ni.cls == NodeClass::kPeripheral) {
        for (int m2 : graph->peripheral_neighbors(node)) {
          --nbr_counts[nbr_index(m2, j, edge.from)];
          ++nbr_counts[nbr_index(m2, j, edge.to)];
        }
      }
      const int first = graph->first_node(j, NodeClass::kPeripheral);
      for (int n = first; n < first + graph->block_size(j).peripheral; ++n) update(node_group[static_cast<size_t>(n)]);
      if (ni.cls == NodeClass::kPeripheral) {
        for (int m2 : graph->peripheral_neighbors(node)) {
          if (graph->info(m2).block != j) update(node_group[static_cast<size_t>(m2)]);
        }
      }
    }
    if (++since_refresh >= options.full_refresh_interval) refresh();
    if (options.verify_counts && !state.counts_consistent(*graph)) {
      fail(ErrorKind::kInternal, fmt::format("cached counts diverged after event at t = {}", t));
    }
    return {t, node, edge.from, edge.to};
  }
};

Simulator::Simulator(const BlockGraph& graph, const RateModel& model, SystemState initial, Philox rng,
                     SimulationOptions options)
    : impl_(std::make_unique<Impl>(graph, model, std::move(initial), rng, options)) {}
Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

std::optional<Event> Simulator::step(double t_end) {
  auto& s = *impl_;
  if (!s.pending) {
    const double total = s.tree.total();
    if (!(total > 0.0)) {
      if (!std::isfinite(total)) fail(ErrorKind::kInternal, "total rate is not finite");
      return std::nullopt;
    }
    double next = s.time + s.rng.exponential(total);
    if (next <= s.time) next = std::nextafter(s.time, std::numeric_limits<double>::infinity());
    s.pending = next;
  }
  if (*s.pending > t_end) return std::nullopt;
  const double t = *s.pending;
  s.pending.reset();
  return s.fire(t);
}

std::int64_t Simulator::advance_to(double t_end) {
  std::int64_t fired = 0;
  while (step(t_end)) ++fired;
  return fired;
}

const SystemState& Simulator::state() const { return impl_->state; }
double Simulator::time() const { return impl_->time; }
double Simulator::total_rate() const { return impl_->tree.total(); }

Trajectory simulate(const BlockGraph& graph, const RateModel& model, SystemState initial, double horizon,
                    Philox rng, SimulationOptions options) {
  require(horizon >= 0.0 && std::isfinite(horizon), ErrorKind::kInvalidArgument,
          fmt::format("horizon must be finite and >= 0 (got {})", horizon));
  Trajectory traj;
  traj.initial = initial;
  traj.horizon = horizon;
  Simulator sim(graph, model, std::move(initial), rng, options);
  while (auto ev = sim.step(horizon)) traj.events.push_back(*ev);
  return traj;
}

Trajectory simulate(const BlockGraph& graph, const RateModel& model, SystemState initial, double horizon,
                    std::uint64_t seed) {
  return simulate(graph, model, std::move(initial), horizon, Philox::stream(seed, 0));
}

namespace {
void check_grid(std::span<const double> grid, double horizon) {
  require(!grid.empty(), ErrorKind::kInvalidArgument, "empty time grid");
  for (size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= 0.0 && grid[i] <= horizon, ErrorKind::kInvalidArgument,
            fmt::format("grid time {} outside [0, {}]", grid[i], horizon));
    require(i == 0 || grid[i] > grid[i - 1], ErrorKind::kInvalidArgument,
            "grid times must be strictly increasing");
  }
}
}  // namespace

std::vector<EmpiricalVector> simulate_on_grid(const BlockGraph& graph, const RateModel& model,
                                              SystemState initial, std::span<const double> grid,
                                              Philox rng) {
  check_grid(grid, std::numeric_limits<double>::infinity());
  Simulator sim(graph, model, std::move(initial), rng);
  std::vector<EmpiricalVector> out;
  out.reserve(grid.size());
  for (double t : grid) {
    sim.advance_to(t);
    out.push_back(sim.state().empirical(graph));
  }
  return out;
}

std::vector<EmpiricalVector> empirical_process(const Trajectory& trajectory, const BlockGraph& graph,
                                               std::span<const double> grid) {
  check_grid(grid, trajectory.horizon);
  SystemState state = trajectory.initial;
  std::vector<EmpiricalVector> out;
  out.reserve(grid.size());
  size_t next = 0;
  for (double t : grid) {
    while (next < trajectory.events.size() && trajectory.events[next].time <= t) {
      const auto& ev = trajectory.events[next++];
      state.recolor(graph, ev.node, ev.to);
    }
    out.push_back(state.empirical(graph));
  }
  return out;
}

std::vector<double> uniform_grid(double horizon, int points) {
  require(points >= 2, ErrorKind::kInvalidArgument, "grid needs at least two points");
  require(horizon > 0.0, ErrorKind::kInvalidArgument, "grid horizon must be positive");
  std::vector<double> grid(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<size_t>(i)] = horizon * i / (points - 1);
  grid.back() = horizon;
  return grid;
}

}  // namespace blockmf
