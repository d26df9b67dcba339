#include <benchmark/benchmark.h>

#include <vector>

#include "blockmf/block_graph.hpp"
#include "blockmf/ldp.hpp"
#include "blockmf/mean_field.hpp"
#include "blockmf/metrics.hpp"
#include "blockmf/particle_sim.hpp"
#include "blockmf/rate_model.hpp"

using namespace blockmf;

namespace {

RateModel sis() { return sis_model({3.0, 2.0}, {2.0, 2.5}, 3.0, {1.0, 1.2}); }
std::vector<Measure> sis_init() {
  return {Measure{0.9, 0.1}, Measure{0.8, 0.2}, Measure{0.95, 0.05}, Measure{0.85, 0.15}};
}

// Queue model with K colors on r blocks, for mean-field cost scaling.
RateModel queues(int k) {
  std::vector<double> zeta(static_cast<size_t>(k), 1.0), vartheta(static_cast<size_t>(k), 1.2);
  return queue_model(k, zeta, vartheta, 0.3);
}

void BM_SimulateComplete(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto graph = complete_graph_for_total(n, {0.5, 0.5}, {0.5, 0.5});
  const auto model = sis();
  std::int64_t events = 0;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Philox rng = Philox::stream(1, seed++);
    auto s = sample_initial_state(graph, sis_init(), rng);
    Simulator sim(graph, model, std::move(s), rng);
    events += sim.advance_to(3.0);
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulateComplete)->Arg(80)->Arg(320)->Arg(1280)->Arg(5120)->Unit(benchmark::kMillisecond);

void BM_SimulateRegular(benchmark::State& state) {
  const int half = static_cast<int>(state.range(0)) / 4;
  const auto graph = build_regular_peripheral({{half, half}, {half, half}}, 0.5);
  const auto model = sis();
  std::int64_t events = 0;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Philox rng = Philox::stream(2, seed++);
    auto s = sample_initial_state(graph, sis_init(), rng);
    Simulator sim(graph, model, std::move(s), rng);
    events += sim.advance_to(3.0);
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SimulateRegular)->Arg(80)->Arg(320)->Arg(1280)->Unit(benchmark::kMillisecond);

void BM_MeanField(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const int r = static_cast<int>(state.range(1));
  const auto model = queues(k);
  std::vector<double> alpha(static_cast<size_t>(r), 1.0 / r), pc(static_cast<size_t>(r), 0.5);
  const auto targets = ProportionTargets::complete_limit(alpha, pc);
  std::vector<Measure> init(static_cast<size_t>(2 * r), Measure::delta(static_cast<size_t>(k), 0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_mckean_vlasov(model, targets, init, 5.0, 0.002));
  }
}
BENCHMARK(BM_MeanField)->Args({2, 1})->Args({5, 3})->Args({10, 3})->Args({20, 5})->Unit(benchmark::kMillisecond);

void BM_Picard(benchmark::State& state) {
  const auto model = sis();
  const auto targets = ProportionTargets::complete_limit({0.5, 0.5}, {0.5, 0.5});
  for (auto _ : state) {
    benchmark::DoNotOptimize(picard_iterate(model, targets, sis_init(), 3.0, 0.002, 1e-8, 50));
  }
}
BENCHMARK(BM_Picard)->Unit(benchmark::kMillisecond);

void BM_BoundedLipschitz(benchmark::State& state) {
  const auto k = static_cast<size_t>(state.range(0));
  Measure a(k), b(k);
  for (size_t z = 0; z < k; ++z) {
    a[z] = static_cast<double>(z + 1);
    b[z] = static_cast<double>(k - z);
  }
  const double sa = a.mass(), sb = b.mass();
  for (size_t z = 0; z < k; ++z) {
    a[z] /= sa;
    b[z] /= sb;
  }
  for (auto _ : state) benchmark::DoNotOptimize(d_bl(a, b));
}
BENCHMARK(BM_BoundedLipschitz)->Arg(2)->Arg(8)->Arg(64);

void BM_VariationalCost(benchmark::State& state) {
  const auto model = sis();
  const auto targets = ProportionTargets::complete_limit({0.5, 0.5}, {0.5, 0.5});
  const auto flow = solve_mckean_vlasov(model, targets, sis_init(), 3.0, 0.003);
  for (auto _ : state) benchmark::DoNotOptimize(variational_cost(flow, targets, model));
}
BENCHMARK(BM_VariationalCost)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
