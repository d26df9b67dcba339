#include "blockmf/chaos.hpp"

#include <cmath>

#include <fmt/format.h>

#include "blockmf/error.hpp"
#include "blockmf/mean_field.hpp"
#include "blockmf/metrics.hpp"
#include "blockmf/particle_sim.hpp"
#include "blockmf/rng.hpp"

namespace blockmf {
namespace {

constexpr std::uint64_t kMultichaosTag = 0x6d756c7469ULL;
constexpr std::uint64_t kBootstrapTag = 0x626f6f74ULL;

struct Sample {
  double distance = 0.0;
  std::vector<double> per_component;
};

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_error_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

int default_threads() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

ConvergenceReport lln_experiment(const GraphFamily& family, const RateModel& model,
                                 const ProportionTargets& targets, std::span<const Measure> init,
                                 const LlnSettings& s) {
  require(s.replicas >= 1, ErrorKind::kInvalidArgument, "need at least one replica");
  require(!s.totals.empty(), ErrorKind::kInvalidArgument, "empty list of system sizes");
  for (size_t i = 1; i < s.totals.size(); ++i) {
    require(s.totals[i] > s.totals[i - 1], ErrorKind::kInvalidArgument, "system sizes must be strictly increasing");
  }
  const double dt = s.dt > 0.0 ? s.dt : default_dt(model);
  const MeanFieldFlow flow = solve_mckean_vlasov(model, targets, init, s.horizon, dt);
  const auto grid = uniform_grid(s.horizon, s.grid_points);
  std::vector<std::vector<Measure>> limit;
  limit.reserve(grid.size());
  for (double t : grid) limit.push_back(flow.interpolate(t));
  const int comps = 2 * targets.block_count();

  ConvergenceReport report;
  for (int total : s.totals) {
    const BlockGraph graph = family(total);
    require(graph.block_count() == targets.block_count(), ErrorKind::kInvalidConfiguration,
            fmt::format("graph for N = {} has {} blocks, expected {}", total, graph.block_count(), targets.block_count()));
    const auto samples = run_replicas<Sample>(static_cast<size_t>(s.replicas), s.threads, [&](size_t i) {
      Philox rng = Philox::stream(s.seed, static_cast<std::uint64_t>(total), i);
      SystemState state = sample_initial_state(graph, init, rng);
      const auto path = simulate_on_grid(graph, model, std::move(state), grid, rng);
      Sample out;
      out.per_component.assign(static_cast<size_t>(comps), 0.0);
      for (size_t g = 0; g < grid.size(); ++g) {
        for (int c = 0; c < comps; ++c) {
          const double d = d_bl(path[g].components[static_cast<size_t>(c)], limit[g][static_cast<size_t>(c)]);
          out.per_component[static_cast<size_t>(c)] = std::max(out.per_component[static_cast<size_t>(c)], d);
          out.distance = std::max(out.distance, d);
        }
      }
      return out;
    });
    ConvergenceRow row;
    row.total = total;
    row.replicas = s.replicas;
    std::vector<double> values;
    values.reserve(samples.size());
    for (const auto& x : samples) values.push_back(x.distance);
    row.mean_distance = mean_of(values);
    row.std_error = std_error_of(values);
    row.component_mean.assign(static_cast<size_t>(comps), 0.0);
    for (const auto& x : samples) {
      for (int c = 0; c < comps; ++c) row.component_mean[static_cast<size_t>(c)] += x.per_component[static_cast<size_t>(c)] / s.replicas;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

double independence_tv(std::span<const double> joint, int colors, int nodes, std::vector<double>* product) {
  std::vector<std::vector<double>> marginal(static_cast<size_t>(nodes), std::vector<double>(static_cast<size_t>(colors), 0.0));
  for (size_t cell = 0; cell < joint.size(); ++cell) {
    size_t rest = cell;
    for (int k = 0; k < nodes; ++k) {
      marginal[static_cast<size_t>(k)][rest % static_cast<size_t>(colors)] += joint[cell];
      rest /= static_cast<size_t>(colors);
    }
  }
  double tv = 0.0;
  if (product != nullptr) product->assign(joint.size(), 0.0);
  for (size_t cell = 0; cell < joint.size(); ++cell) {
    size_t rest = cell;
    double p = 1.0;
    for (int k = 0; k < nodes; ++k) {
      p *= marginal[static_cast<size_t>(k)][rest % static_cast<size_t>(colors)];
      rest /= static_cast<size_t>(colors);
    }
    if (product != nullptr) (*product)[cell] = p;
    tv += std::abs(joint[cell] - p);
  }
  return 0.5 * tv;
}

MultichaosResult multichaos_test(const BlockGraph& graph, const RateModel& model, std::span<const Measure> init,
                                 std::span<const int> tagged_nodes, const MultichaosSettings& s) {
  require(!tagged_nodes.empty() && tagged_nodes.size() <= 3, ErrorKind::kInvalidArgument,
          "between 1 and 3 tagged nodes are supported");
  for (int n : tagged_nodes) {
    require(n >= 0 && n < graph.node_count(), ErrorKind::kInvalidArgument, fmt::format("tagged node {} does not exist", n));
  }
  require(s.replicas >= 2, ErrorKind::kInvalidArgument, "need at least two replicas");
  require(s.horizon >= 0.0, ErrorKind::kInvalidArgument, "horizon must be >= 0");
  const int k = model.colors();
  const int m = static_cast<int>(tagged_nodes.size());
  size_t cells = 1;
  for (int i = 0; i < m; ++i) cells *= static_cast<size_t>(k);

  const auto outcomes = run_replicas<size_t>(static_cast<size_t>(s.replicas), s.threads, [&](size_t i) {
    Philox rng = Philox::stream(s.seed, kMultichaosTag ^ static_cast<std::uint64_t>(graph.node_count()), i);
    SystemState state = sample_initial_state(graph, init, rng);
    Simulator sim(graph, model, std::move(state), rng);
    sim.advance_to(s.horizon);
    size_t cell = 0;
    for (int j = m; j-- > 0;) cell = cell * static_cast<size_t>(k) + static_cast<size_t>(sim.state().color(tagged_nodes[static_cast<size_t>(j)]));
    return cell;
  });

  MultichaosResult result;
  result.nodes.assign(tagged_nodes.begin(), tagged_nodes.end());
  result.colors = k;
  result.replicas = s.replicas;
  result.joint.assign(cells, 0.0);
  for (size_t cell : outcomes) result.joint[cell] += 1.0 / s.replicas;
  result.tv = independence_tv(result.joint, k, m, &result.product);

  if (s.bootstrap >= 2) {
    std::vector<double> tvs;
    tvs.reserve(static_cast<size_t>(s.bootstrap));
    std::vector<double> joint(cells);
    for (int b = 0; b < s.bootstrap; ++b) {
      Philox rng = Philox::stream(s.seed, kBootstrapTag, static_cast<std::uint64_t>(b));
      std::fill(joint.begin(), joint.end(), 0.0);
      for (int r = 0; r < s.replicas; ++r) joint[outcomes[rng.below(static_cast<std::uint64_t>(s.replicas))]] += 1.0 / s.replicas;
      tvs.push_back(independence_tv(joint, k, m));
    }
    result.tv_se = std_error_of(tvs) * std::sqrt(static_cast<double>(tvs.size()));
  }
  return result;
}

}  // namespace blockmf
