#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "blockmf/error.hpp"
#include "blockmf/metrics.hpp"
#include "helpers.hpp"

using namespace blockmf;
using blockmf::testing::random_measure;

namespace {

using Matrix = std::vector<std::vector<double>>;

// Least-squares-free solve of A x = b for square or tall consistent systems
// by Gaussian elimination with partial pivoting. Returns false when singular
// or inconsistent.
bool solve(Matrix a, std::vector<double> b, std::vector<double>& x) {
  const size_t rows = a.size(), cols = a.front().size();
  size_t rank = 0;
  std::vector<size_t> pivot_col;
  for (size_t c = 0; c < cols && rank < rows; ++c) {
    size_t best = rank;
    for (size_t r = rank; r < rows; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[best][c])) best = r;
    }
    if (std::abs(a[best][c]) < 1e-12) return false;
    std::swap(a[best], a[rank]);
    std::swap(b[best], b[rank]);
    for (size_t r = 0; r < rows; ++r) {
      if (r == rank) continue;
      const double f = a[r][c] / a[rank][c];
      for (size_t k = 0; k < cols; ++k) a[r][k] -= f * a[rank][k];
      b[r] -= f * b[rank];
    }
    pivot_col.push_back(c);
    ++rank;
  }
  if (rank < cols) return false;
  for (size_t r = rank; r < rows; ++r) {
    if (std::abs(b[r]) > 1e-9) return false;
  }
  x.assign(cols, 0.0);
  for (size_t r = 0; r < rank; ++r) x[pivot_col[r]] = b[r] / a[r][pivot_col[r]];
  return true;
}

void subsets(size_t n, size_t k, auto&& visit) {
  std::vector<size_t> idx(k);
  for (size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    visit(idx);
    size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Transport LP by enumeration of basic feasible solutions.
double w1_by_vertices(const Measure& mu, const Measure& nu) {
  const size_t k = mu.size(), cells = k * k, basis = 2 * k - 1;
  double best = std::numeric_limits<double>::infinity();
  subsets(cells, basis, [&](const std::vector<size_t>& chosen) {
    Matrix a(2 * k, std::vector<double>(basis, 0.0));
    std::vector<double> b(2 * k);
    for (size_t i = 0; i < k; ++i) {
      b[i] = mu[i];
      b[k + i] = nu[i];
    }
    for (size_t v = 0; v < basis; ++v) {
      a[chosen[v] / k][v] = 1.0;
      a[k + chosen[v] % k][v] = 1.0;
    }
    std::vector<double> x;
    if (!solve(a, b, x)) return;
    double cost = 0.0;
    for (size_t v = 0; v < basis; ++v) {
      if (x[v] < -1e-12) return;
      cost += x[v] * std::abs(static_cast<double>(chosen[v] / k) - static_cast<double>(chosen[v] % k));
    }
    best = std::min(best, cost);
  });
  return best;
}

// Bounded-Lipschitz LP in g by enumeration of vertices: K active constraints
// out of |g(z)| <= 1 and |g(z) - g(z')| <= |z - z'| for all pairs.
double dbl_by_vertices(const Measure& mu, const Measure& nu) {
  const size_t k = mu.size();
  Matrix rows;
  std::vector<double> rhs;
  for (size_t z = 0; z < k; ++z) {
    for (double s : {1.0, -1.0}) {
      std::vector<double> r(k, 0.0);
      r[z] = s;
      rows.push_back(r);
      rhs.push_back(1.0);
    }
  }
  for (size_t z = 0; z < k; ++z) {
    for (size_t w = z + 1; w < k; ++w) {
      for (double s : {1.0, -1.0}) {
        std::vector<double> r(k, 0.0);
        r[z] = s;
        r[w] = -s;
        rows.push_back(r);
        rhs.push_back(static_cast<double>(w - z));
      }
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  subsets(rows.size(), k, [&](const std::vector<size_t>& chosen) {
    Matrix a;
    std::vector<double> b;
    for (size_t i : chosen) {
      a.push_back(rows[i]);
      b.push_back(rhs[i]);
    }
    std::vector<double> g;
    if (!solve(a, b, g)) return;
    for (size_t i = 0; i < rows.size(); ++i) {
      double lhs = 0.0;
      for (size_t z = 0; z < k; ++z) lhs += rows[i][z] * g[z];
      if (lhs > rhs[i] + 1e-9) return;
    }
    double value = 0.0;
    for (size_t z = 0; z < k; ++z) value += g[z] * (mu[z] - nu[z]);
    best = std::max(best, value);
  });
  return best;
}

}  // namespace

TEST_CASE("w1 examples") {
  CHECK(w1_discrete(Measure{1, 0}, Measure{0, 1}) == 1.0);
  CHECK(w1_discrete(Measure{0.2, 0.3, 0.5}, Measure{0.2, 0.3, 0.5}) == 0.0);
  CHECK(w1_discrete(Measure{0.5, 0, 0.5}, Measure{0, 1, 0}) == doctest::Approx(1.0));
  CHECK(w1_by_vertices(Measure{0.5, 0, 0.5}, Measure{0, 1, 0}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(w1_discrete(Measure{1, 0}, Measure{1, 0, 0}), Error);
}

TEST_CASE("w1 matches the transport LP") {
  auto rng = Philox::stream(71, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(3));
    const auto mu = random_measure(rng, k), nu = random_measure(rng, k);
    CHECK(w1_discrete(mu, nu) == doctest::Approx(w1_by_vertices(mu, nu)).epsilon(1e-9));
  }
}

TEST_CASE("bounded-Lipschitz examples") {
  CHECK(d_bl(Measure{1, 0, 0}, Measure{0, 0, 1}) == doctest::Approx(2.0));
  CHECK(d_bl(Measure{1, 0, 0, 0, 0}, Measure{0, 0, 0, 0, 1}) == doctest::Approx(2.0));
  CHECK(d_bl(Measure{1, 0}, Measure{0, 1}) == doctest::Approx(1.0));
  CHECK(d_bl(Measure{0.3, 0.7}, Measure{0.3, 0.7}) == 0.0);
}

TEST_CASE("bounded-Lipschitz matches the LP vertices and Kantorovich-Rubinstein") {
  auto rng = Philox::stream(72, 0);
  for (int trial = 0; trial < 80; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(3));
    const auto mu = random_measure(rng, k), nu = random_measure(rng, k);
    const double d = d_bl(mu, nu);
    CHECK(d == doctest::Approx(dbl_by_vertices(mu, nu)).epsilon(1e-9));
    CHECK(d <= std::min(w1_discrete(mu, nu), 2.0) + 1e-12);
    if (k <= 3) CHECK(d == doctest::Approx(w1_discrete(mu, nu)).epsilon(1e-12));
  }
}

TEST_CASE("metric axioms on random triples") {
  auto rng = Philox::stream(73, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(9));
    const auto a = random_measure(rng, k), b = random_measure(rng, k), c = random_measure(rng, k);
    for (auto* f : {&w1_discrete, &d_bl}) {
      CHECK((*f)(a, b) == (*f)(b, a));
      CHECK((*f)(a, a) == 0.0);
      CHECK((*f)(a, b) > 0.0);
      CHECK((*f)(a, c) <= (*f)(a, b) + (*f)(b, c) + 1e-12);
    }
  }
}

TEST_CASE("bounded-Lipschitz with many colors") {
  auto rng = Philox::stream(74, 0);
  // Vertex enumeration is too slow here; check hand-made instances and bounds.
  Measure a(10), b(10);
  a[0] = 1.0;
  b[9] = 1.0;
  CHECK(d_bl(a, b) == doctest::Approx(2.0));
  Measure c(10), d(10);
  c[4] = 1.0;
  d[5] = 1.0;
  CHECK(d_bl(c, d) == doctest::Approx(1.0));
  for (int trial = 0; trial < 50; ++trial) {
    const auto mu = random_measure(rng, 12), nu = random_measure(rng, 12);
    CHECK(d_bl(mu, nu) <= std::min(w1_discrete(mu, nu), l1_distance(mu, nu)) + 1e-12);
    // g(z) = (z - 5.5) / 5.5 is admissible.
    CHECK(d_bl(mu, nu) >= std::abs(mu.mean() - nu.mean()) / 5.5 - 1e-12);
  }
}

TEST_CASE("relative entropy") {
  CHECK(relative_entropy(Measure{0.3, 0.7}, Measure{0.3, 0.7}) == 0.0);
  CHECK(relative_entropy(Measure{1, 0}, Measure{0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  CHECK(std::isinf(relative_entropy(Measure{0.5, 0.5}, Measure{1, 0})));
}
