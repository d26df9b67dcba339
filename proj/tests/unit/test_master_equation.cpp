#include <doctest.h>

#include <cmath>

#include "blockmf/error.hpp"
#include "blockmf/master_equation.hpp"
#include "blockmf/particle_sim.hpp"
#include "helpers.hpp"

using namespace blockmf;

TEST_CASE("configuration encoding round trip") {
  const std::vector<int> colors{2, 0, 1, 1};
  const auto idx = encode_configuration(colors, 3);
  CHECK(idx == 2 + 0 * 3 + 1 * 9 + 1 * 27);
  CHECK(decode_configuration(idx, 4, 3) == colors);
}

TEST_CASE("horizon zero returns the initial law") {
  const auto g = build_complete_peripheral({{2, 1}});
  const auto model = sis_model({2.0}, {1.0}, 1.0, {0.5});
  const std::vector<Measure> init{Measure{0.3, 0.7}, Measure{0.6, 0.4}};
  const auto p0 = product_distribution(g, init);
  CHECK(master_equation_oracle(g, model, p0, 0.0) == p0);
}

TEST_CASE("symmetric flips relax to one half") {
  const auto g = build_complete_peripheral({{1, 1}});
  const auto model = RateModel::shared(testing::constant_two_state(1.0, 1.0));
  const std::vector<Measure> init{Measure{1, 0}, Measure{1, 0}};
  const auto p = master_equation_oracle(g, model, product_distribution(g, init), 20.0);
  for (int n = 0; n < 2; ++n) CHECK(node_marginal(p, n, 2, 2)[1] == doctest::Approx(0.5).epsilon(1e-9));
  // Exact two-state solution at a moderate time.
  const auto q = master_equation_oracle(g, model, product_distribution(g, init), 0.7);
  CHECK(node_marginal(q, 0, 2, 2)[1] == doctest::Approx(0.5 * (1 - std::exp(-1.4))).epsilon(1e-10));
}

TEST_CASE("oracle preserves total probability") {
  const auto g = build_complete_peripheral({{2, 1}, {1, 2}});
  const auto model = queue_model(3, {1.0, 0.8, 0.6}, {0.0, 1.0, 1.2}, 0.5);
  const std::vector<Measure> init(4, Measure::uniform(3));
  const auto p = master_equation_oracle(g, model, product_distribution(g, init), 1.5);
  double s = 0.0;
  for (double v : p) {
    CHECK(v >= -1e-15);
    s += v;
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("capacity is enforced") {
  const auto g = build_complete_peripheral({{6, 7}});
  const auto model = sis_model({1.0}, {1.0}, 1.0, {1.0});
  const std::vector<Measure> init{Measure{1, 0}, Measure{1, 0}};
  try {
    product_distribution(g, init);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCapacity);
  }
}

TEST_CASE("three-node SIS: Monte Carlo agrees with the oracle") {
  const auto g = build_complete_peripheral({{2, 1}});
  const auto model = sis_model({2.0}, {1.5}, 1.0, {0.8});
  const std::vector<Measure> init{Measure{0.5, 0.5}, Measure{0.5, 0.5}};
  const double horizon = 2.0;
  const auto p = master_equation_oracle(g, model, product_distribution(g, init), horizon);
  const int replicas = 20000;
  std::vector<std::vector<double>> hits(3);
  for (int i = 0; i < replicas; ++i) {
    auto rng = Philox::stream(2024, 0, static_cast<std::uint64_t>(i));
    const auto s0 = sample_initial_state(g, init, rng);
    Simulator sim(g, model, s0, rng);
    sim.advance_to(horizon);
    for (int n = 0; n < 3; ++n) hits[static_cast<size_t>(n)].push_back(sim.state().color(n) == 1 ? 1.0 : 0.0);
  }
  for (int n = 0; n < 3; ++n) {
    const double exact = node_marginal(p, n, 3, 2)[1];
    const double se = std::sqrt(exact * (1 - exact) / replicas);
    CHECK(std::abs(testing::mean(hits[static_cast<size_t>(n)]) - exact) < 3 * se);
  }
}

TEST_CASE("non-complete peripheral graph: oracle matches Monte Carlo cells") {
  // Two blocks of (1,2) with each peripheral linked to one foreign peripheral.
  const auto g = build_regular_peripheral({{1, 2}, {1, 2}}, 0.5);
  REQUIRE_FALSE(g.complete_peripheral());
  const auto model = sis_model({1.5, 1.0}, {1.0, 2.0}, 2.5, {0.7, 0.5});
  const std::vector<Measure> init{Measure{0.6, 0.4}, Measure{0.3, 0.7}, Measure{0.8, 0.2}, Measure{0.5, 0.5}};
  const double horizon = 1.0;
  const auto p = master_equation_oracle(g, model, product_distribution(g, init), horizon);
  const int replicas = 20000;
  std::vector<double> freq(p.size(), 0.0);
  for (int i = 0; i < replicas; ++i) {
    auto rng = Philox::stream(99, 0, static_cast<std::uint64_t>(i));
    const auto s0 = sample_initial_state(g, init, rng);
    Simulator sim(g, model, s0, rng);
    sim.advance_to(horizon);
    freq[encode_configuration(sim.state().node_colors(), 2)] += 1.0 / replicas;
  }
  int within = 0;
  for (size_t s = 0; s < p.size(); ++s) {
    const double se = std::sqrt(std::max(p[s] * (1 - p[s]), 1e-12) / replicas);
    within += std::abs(freq[s] - p[s]) < 3 * se;
  }
  CHECK(within >= static_cast<int>(0.95 * static_cast<double>(p.size())));
}
