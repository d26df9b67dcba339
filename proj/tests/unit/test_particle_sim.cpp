#include <doctest.h>

#include <cmath>
#include <numeric>

#include "blockmf/error.hpp"
#include "blockmf/particle_sim.hpp"
#include "helpers.hpp"

using namespace blockmf;
using blockmf::testing::constant_two_state;

namespace {

std::vector<Measure> uniform_init(int blocks, int colors) {
  return std::vector<Measure>(static_cast<size_t>(2 * blocks), Measure::uniform(static_cast<size_t>(colors)));
}

}  // namespace

TEST_CASE("local empirical measure of a small block") {
  const auto g = build_complete_peripheral({{2, 1}});
  const SystemState s(g, 2, {1, 1, 0});
  const auto loc = local_empirical(s, g, 0);
  CHECK(loc.parts[0] == Measure{0, 1});
  CHECK(loc.parts[1] == Measure{1, 0});
  CHECK(loc.weights[0] == doctest::Approx(2.0 / 3.0));
  CHECK(loc.weights[1] == doctest::Approx(1.0 / 3.0));
  CHECK(loc.combined[0] == doctest::Approx(1.0 / 3.0));
  CHECK(loc.combined[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("monochrome state gives point masses everywhere") {
  const auto g = build_complete_peripheral({{2, 2}, {3, 1}});
  const SystemState s(g, 3, std::vector<int>(static_cast<size_t>(g.node_count()), 2));
  for (int n = 0; n < g.node_count(); ++n) {
    const auto loc = local_empirical(s, g, n);
    CHECK(loc.combined == Measure{0, 0, 1});
  }
  for (const auto& m : s.empirical(g).components) CHECK(m == Measure{0, 0, 1});
}

TEST_CASE("non-complete graph: a peripheral only sees its neighbors") {
  const auto g = build_regular_peripheral({{2, 2}, {3, 2}, {2, 2}, {4, 2}}, 0.5);
  auto rng = Philox::stream(8, 0);
  const auto s = sample_initial_state(g, uniform_init(4, 3), rng);
  for (int n = 0; n < g.node_count(); ++n) {
    if (!g.is_peripheral(n)) continue;
    // Brute force: combined measure over the closed neighborhood.
    Measure expect(3);
    int members = 0;
    const int j = g.info(n).block;
    for (int m = 0; m < g.node_count(); ++m) {
      const bool adjacent = m == n || (g.info(m).block == j && !g.is_peripheral(m)) ||
                            (g.is_peripheral(m) && std::count(g.peripheral_neighbors(n).begin(), g.peripheral_neighbors(n).end(), m) > 0);
      if (!adjacent) continue;
      expect[static_cast<size_t>(s.color(m))] += 1.0;
      ++members;
    }
    CHECK(members == g.degree(n) + 1);
    const auto loc = local_empirical(s, g, n);
    for (int z = 0; z < 3; ++z) CHECK(loc.combined[static_cast<size_t>(z)] == doctest::Approx(expect[static_cast<size_t>(z)] / members));
  }
}

TEST_CASE("block decomposition identity is exact on counts") {
  const auto g = build_complete_peripheral({{3, 5}, {4, 2}});
  auto rng = Philox::stream(2, 0);
  const auto s = sample_initial_state(g, uniform_init(2, 3), rng);
  for (int j = 0; j < 2; ++j) {
    for (int z = 0; z < 3; ++z) {
      int total = 0;
      for (int n = g.first_node(j); n < g.first_node(j) + g.block_size(j).total(); ++n) total += s.color(n) == z;
      CHECK(total == s.count(j, NodeClass::kCentral, z) + s.count(j, NodeClass::kPeripheral, z));
    }
  }
}

TEST_CASE("frozen dynamics produce no events") {
  const auto g = build_complete_peripheral({{2, 2}, {1, 3}});
  const auto model = RateModel::shared(constant_two_state(0.0, 0.0));
  auto rng = Philox::stream(1, 0);
  const auto s = sample_initial_state(g, uniform_init(2, 2), rng);
  const auto tr = simulate(g, model, s, 5.0, 99);
  CHECK(tr.events.empty());
}

TEST_CASE("simulation is deterministic in the seed") {
  const auto g = build_regular_peripheral({{3, 4}, {2, 4}}, 0.5);
  const auto model = sis_model({2.0, 1.0}, {1.0, 1.5}, 1.2, {0.5, 0.7});
  auto rng = Philox::stream(1, 0);
  const auto s = sample_initial_state(g, uniform_init(2, 2), rng);
  const auto a = simulate(g, model, s, 3.0, 1234);
  const auto b = simulate(g, model, s, 3.0, 1234);
  const auto c = simulate(g, model, s, 3.0, 1235);
  CHECK(a.events == b.events);
  CHECK_FALSE(a.events == c.events);
  CHECK(a.events.size() > 10);
}

TEST_CASE("event times strictly increase and events follow admissible edges") {
  const auto g = build_complete_peripheral({{3, 3}, {2, 4}});
  const auto model = queue_model(4, {1.0, 1.0, 1.0, 1.0}, {0.0, 1.5, 1.5, 1.5}, 0.8);
  auto rng = Philox::stream(4, 0);
  const auto s = sample_initial_state(g, uniform_init(2, 4), rng);
  const auto tr = simulate(g, model, s, 20.0, 5);
  REQUIRE(!tr.events.empty());
  SystemState replay = tr.initial;
  double last = 0.0;
  for (const auto& e : tr.events) {
    CHECK(e.time > last);
    CHECK(e.time <= 20.0);
    last = e.time;
    CHECK(replay.color(e.node) == e.from);
    CHECK(model.color_graph().find(e.from, e.to).has_value());
    replay.recolor(g, e.node, e.to);
  }
  CHECK(replay.counts_consistent(g));
}

TEST_CASE("verify mode recounts after every event") {
  const auto g = build_regular_peripheral({{2, 4}, {2, 4}}, 0.5);
  const auto model = sis_model({2.0, 1.0}, {1.0, 1.5}, 1.2, {0.5, 0.7});
  auto rng = Philox::stream(5, 0);
  const auto s = sample_initial_state(g, uniform_init(2, 2), rng);
  SimulationOptions opts;
  opts.verify_counts = true;
  opts.full_refresh_interval = 7;
  const auto checked = simulate(g, model, s, 4.0, Philox::stream(77, 0), opts);
  const auto plain = simulate(g, model, s, 4.0, Philox::stream(77, 0));
  CHECK(checked.events.size() == plain.events.size());
}

TEST_CASE("two-state flips at unit rate: Poisson event count") {
  const auto g = build_complete_peripheral({{1, 1}});
  const auto model = RateModel::shared(constant_two_state(1.0, 1.0));
  std::vector<double> counts;
  const int replicas = 10000;
  for (int i = 0; i < replicas; ++i) {
    auto rng = Philox::stream(21, 0, static_cast<std::uint64_t>(i));
    const auto s = sample_initial_state(g, uniform_init(1, 2), rng);
    const auto tr = simulate(g, model, s, 10.0, rng);
    counts.push_back(static_cast<double>(tr.jump_counts()[0]));
  }
  CHECK(std::abs(testing::mean(counts) - 10.0) < 3.0 * std::sqrt(10.0 / replicas));
}

TEST_CASE("empirical process") {
  const auto g = build_complete_peripheral({{2, 1}, {1, 1}});
  const SystemState init(g, 2, {0, 0, 1, 0, 1});
  SUBCASE("grid {0} is the initial vector") {
    Trajectory tr{init, {}, 2.0};
    const std::vector<double> grid{0.0};
    const auto e = empirical_process(tr, g, grid);
    CHECK(e[0].components == init.empirical(g).components);
  }
  SUBCASE("one central flip at t = 1") {
    Trajectory tr{init, {{1.0, 1, 0, 1}}, 2.0};
    const std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0};
    const auto e = empirical_process(tr, g, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
      const double expect = grid[i] >= 1.0 ? 0.5 : 0.0;
      CHECK(e[i].at(0, NodeClass::kCentral)[1] == expect);
      for (int c = 1; c < 4; ++c) CHECK(e[i].components[static_cast<size_t>(c)] == e[0].components[static_cast<size_t>(c)]);
    }
  }
  SUBCASE("grid outside the horizon") {
    Trajectory tr{init, {}, 2.0};
    const std::vector<double> grid{0.0, 3.0};
    CHECK_THROWS_AS(empirical_process(tr, g, grid), Error);
  }
}

TEST_CASE("grid simulation agrees with the replayed trajectory") {
  const auto g = build_complete_peripheral({{3, 2}, {2, 3}});
  const auto model = sis_model({2.0, 1.0}, {1.0, 1.5}, 1.2, {0.5, 0.7});
  auto rng = Philox::stream(6, 0);
  const auto s = sample_initial_state(g, uniform_init(2, 2), rng);
  const auto grid = uniform_grid(3.0, 13);
  const auto tr = simulate(g, model, s, 3.0, Philox::stream(6, 1));
  const auto direct = simulate_on_grid(g, model, s, grid, Philox::stream(6, 1));
  const auto replayed = empirical_process(tr, g, grid);
  for (size_t i = 0; i < grid.size(); ++i) CHECK(direct[i].components == replayed[i].components);
}

TEST_CASE("exchangeability: permuting central colors within a block") {
  // Nodes 0..2 are the central nodes of block 0; a permutation of their
  // colors leaves every aggregated rate unchanged, so the empirical process
  // under the same stream is identical.
  const auto g = build_complete_peripheral({{3, 2}, {2, 2}});
  const auto model = sis_model({2.0, 1.0}, {1.0, 1.5}, 1.2, {0.5, 0.7});
  const SystemState a(g, 2, {1, 0, 0, 1, 0, 0, 1, 1, 0});
  const SystemState b(g, 2, {0, 0, 1, 1, 0, 0, 1, 1, 0});
  const auto grid = uniform_grid(2.0, 9);
  const auto ea = simulate_on_grid(g, model, a, grid, Philox::stream(3, 3));
  const auto eb = simulate_on_grid(g, model, b, grid, Philox::stream(3, 3));
  for (size_t i = 0; i < grid.size(); ++i) CHECK(ea[i].components == eb[i].components);
}
