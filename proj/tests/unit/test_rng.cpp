#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "blockmf/rng.hpp"

using namespace blockmf;

TEST_CASE("philox matches the published known-answer vector") {
  // Philox4x32-10 with zero key and zero counter.
  Philox rng(0);
  const auto a = rng();
  const auto b = rng();
  CHECK(a == ((std::uint64_t{0x6627e8d5} << 32) | 0xe169c58d));
  CHECK(b == ((std::uint64_t{0xbc57ac4c} << 32) | 0x9b00dbd8));
  CHECK(rng.counter() == 1);
}

TEST_CASE("streams are reproducible and distinct") {
  auto a = Philox::stream(42, 1, 7);
  auto b = Philox::stream(42, 1, 7);
  auto c = Philox::stream(42, 1, 8);
  auto d = Philox::stream(43, 1, 7);
  for (int i = 0; i < 10; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
    CHECK(x != d());
  }
}

TEST_CASE("uniform stays inside the open unit interval with the right moments") {
  auto rng = Philox::stream(1, 2);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    s += u;
    s2 += u * u;
  }
  CHECK(s / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(s2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.005));
}

TEST_CASE("below is unbiased over a small range") {
  auto rng = Philox::stream(5, 0);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 5 * std::sqrt(10000.0));
}

TEST_CASE("exponential has the requested mean") {
  auto rng = Philox::stream(9, 0);
  double s = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) s += rng.exponential(4.0);
  CHECK(std::abs(s / n - 0.25) < 4 * 0.25 / std::sqrt(n));
}
