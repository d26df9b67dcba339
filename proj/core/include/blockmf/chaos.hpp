#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "blockmf/block_graph.hpp"
#include "blockmf/measure.hpp"
#include "blockmf/rate_model.hpp"

namespace blockmf {

/// Hardware concurrency, at least 1.
int default_threads();

/// Evaluates fn(i) for every i < count on up to `threads` workers. Results are
/// stored by index, so the output does not depend on scheduling. The first
/// exception thrown by any task is rethrown after all workers stop.
template <class T, class F>
std::vector<T> run_replicas(std::size_t count, int threads, F&& fn) {
  std::vector<T> out(count);
  const std::size_t workers =
      std::min(static_cast<std::size_t>(std::max(threads, 1)), std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

/// Maps a total node count to a graph realizing fixed proportions.
using GraphFamily = std::function<BlockGraph(int total)>;

struct ConvergenceRow {
  int total = 0;
  int replicas = 0;
  double mean_distance = 0.0;
  double std_error = 0.0;
  /// Per-component mean of the sup-over-grid d_BL.
  std::vector<double> component_mean;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
};

struct LlnSettings {
  double horizon = 1.0;
  int grid_points = 11;
  std::vector<int> totals;
  int replicas = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Mean-field step; 0 selects the default.
  double dt = 0.0;
};

/// For each total N: simulate `replicas` systems on family(N) from iid initial
/// colors, and record sup over the grid of the max over components of
/// d_BL(empirical, mean-field flow). Replica i of size N uses the substream
/// (seed, N, i).
ConvergenceReport lln_experiment(const GraphFamily& family, const RateModel& model,
                                 const ProportionTargets& targets, std::span<const Measure> init,
                                 const LlnSettings& settings);

struct MultichaosResult {
  std::vector<int> nodes;
  int colors = 0;
  int replicas = 0;
  /// Index sum_k color_k K^k over the tagged nodes.
  std::vector<double> joint;
  std::vector<double> product;
  double tv = 0.0;
  /// Bootstrap standard error of tv.
  double tv_se = 0.0;
};

struct MultichaosSettings {
  double horizon = 1.0;
  int replicas = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
  int bootstrap = 200;
};

/// Joint law of the tagged nodes' colors at the horizon against the product
/// of its marginals. At most 3 tagged nodes.
MultichaosResult multichaos_test(const BlockGraph& graph, const RateModel& model, std::span<const Measure> init,
                                 std::span<const int> tagged_nodes, const MultichaosSettings& settings);

/// TV between a joint law on K^m cells and the product of its marginals.
double independence_tv(std::span<const double> joint, int colors, int nodes, std::vector<double>* product = nullptr);

}  // namespace blockmf
