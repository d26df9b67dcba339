#include "blockmf/master_equation.hpp"

#include <cmath>

#include <fmt/format.h>

#include "blockmf/error.hpp"
#include "blockmf/particle_sim.hpp"

namespace blockmf {
namespace {

std::size_t state_count(int nodes, int k) {
  std::size_t total = 1;
  for (int n = 0; n < nodes; ++n) {
    total *= static_cast<std::size_t>(k);
    require(total <= kOracleMaxStates, ErrorKind::kCapacity,
            fmt::format("{}^{} configurations exceed the oracle cap of {}", k, nodes, kOracleMaxStates));
  }
  return total;
}

struct Transition {
  std::size_t to;
  double rate;
};

}  // namespace

std::size_t encode_configuration(std::span<const int> colors, int k) {
  std::size_t index = 0;
  for (std::size_t n = colors.size(); n-- > 0;) index = index * static_cast<std::size_t>(k) + static_cast<std::size_t>(colors[n]);
  return index;
}

std::vector<int> decode_configuration(std::size_t index, int nodes, int k) {
  std::vector<int> colors(static_cast<std::size_t>(nodes));
  for (auto& c : colors) {
    c = static_cast<int>(index % static_cast<std::size_t>(k));
    index /= static_cast<std::size_t>(k);
  }
  return colors;
}

std::vector<double> product_distribution(const BlockGraph& graph, std::span<const Measure> init) {
  require(static_cast<int>(init.size()) == 2 * graph.block_count(), ErrorKind::kInvalidArgument,
          "need one initial measure per (block, class)");
  const int k = static_cast<int>(init.front().size());
  const int nodes = graph.node_count();
  std::vector<double> dist(state_count(nodes, k));
  for (std::size_t s = 0; s < dist.size(); ++s) {
    const auto colors = decode_configuration(s, nodes, k);
    double p = 1.0;
    for (int n = 0; n < nodes; ++n) {
      const auto& ni = graph.info(n);
      p *= init[static_cast<std::size_t>(component_index(ni.block, ni.cls))][static_cast<std::size_t>(colors[static_cast<std::size_t>(n)])];
    }
    dist[s] = p;
  }
  return dist;
}

std::vector<double> master_equation_oracle(const BlockGraph& graph, const RateModel& model,
                                           std::span<const double> init_dist, double horizon, double tol) {
  model.check_blocks(graph.block_count());
  const int k = model.colors();
  const int nodes = graph.node_count();
  const std::size_t states = state_count(nodes, k);
  require(init_dist.size() == states, ErrorKind::kInvalidArgument,
          fmt::format("initial distribution has {} entries, expected {}", init_dist.size(), states));
  require(horizon >= 0.0 && std::isfinite(horizon), ErrorKind::kInvalidArgument, "horizon must be >= 0");
  require(tol > 0.0, ErrorKind::kInvalidArgument, "tolerance must be positive");

  // Generator rows from a direct neighborhood scan of each configuration.
  std::vector<std::vector<Transition>> rows(states);
  std::vector<double> exit(states, 0.0);
  double uniform_rate = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    auto colors = decode_configuration(s, nodes, k);
    const SystemState state(graph, k, colors);
    for (int n = 0; n < nodes; ++n) {
      const auto& ni = graph.info(n);
      const auto local = local_empirical(state, graph, n);
      const RateSpec& spec = model.spec(ni.block, ni.cls);
      const int z = colors[static_cast<std::size_t>(n)];
      for (int e : spec.color_graph().out_edges(z)) {
        double affine = local.weights[0] * spec.integral_c(e, local.parts[0].weights());
        for (std::size_t g = 1; g < local.parts.size(); ++g) {
          affine += local.weights[g] * spec.integral_p(e, local.parts[g].weights());
        }
        const double rate = spec.finish(e, affine);
        if (rate <= 0.0) continue;
        colors[static_cast<std::size_t>(n)] = spec.color_graph().edge(e).to;
        rows[s].push_back({encode_configuration(colors, k), rate});
        colors[static_cast<std::size_t>(n)] = z;
        exit[s] += rate;
      }
    }
    uniform_rate = std::max(uniform_rate, exit[s]);
  }

  std::vector<double> current(init_dist.begin(), init_dist.end());
  if (horizon == 0.0 || uniform_rate == 0.0) return current;

  const double lt = uniform_rate * horizon;
  std::vector<double> result(states, 0.0);
  std::vector<double> next(states);
  double accumulated = 0.0;
  for (long step = 0;; ++step) {
    const double weight = std::exp(-lt + static_cast<double>(step) * std::log(lt) - std::lgamma(static_cast<double>(step) + 1.0));
    for (std::size_t s = 0; s < states; ++s) result[s] += weight * current[s];
    accumulated += weight;
    if (accumulated >= 1.0 - tol && static_cast<double>(step) >= lt) break;
    require(step < 10'000'000, ErrorKind::kNonConvergence, "uniformization series did not terminate");
    // current <- current * (I + Q / uniform_rate)
    for (std::size_t s = 0; s < states; ++s) next[s] = current[s] * (1.0 - exit[s] / uniform_rate);
    for (std::size_t s = 0; s < states; ++s) {
      if (current[s] == 0.0) continue;
      for (const auto& tr : rows[s]) next[tr.to] += current[s] * tr.rate / uniform_rate;
    }
    current.swap(next);
  }
  return result;
}

Measure node_marginal(std::span<const double> dist, int node, int nodes, int k) {
  Measure m(static_cast<std::size_t>(k));
  for (std::size_t s = 0; s < dist.size(); ++s) {
    const auto colors = decode_configuration(s, nodes, k);
    m[static_cast<std::size_t>(colors[static_cast<std::size_t>(node)])] += dist[s];
  }
  return m;
}

std::vector<Measure> expected_empirical(const BlockGraph& graph, std::span<const double> dist, int k) {
  std::vector<Measure> out(static_cast<std::size_t>(2 * graph.block_count()), Measure(static_cast<std::size_t>(k)));
  const int nodes = graph.node_count();
  for (std::size_t s = 0; s < dist.size(); ++s) {
    const auto colors = decode_configuration(s, nodes, k);
    for (int n = 0; n < nodes; ++n) {
      const auto& ni = graph.info(n);
      out[static_cast<std::size_t>(component_index(ni.block, ni.cls))][static_cast<std::size_t>(colors[static_cast<std::size_t>(n)])] +=
          dist[s] / graph.class_size(ni.block, ni.cls);
    }
  }
  return out;
}

}  // namespace blockmf
