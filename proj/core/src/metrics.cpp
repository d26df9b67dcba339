#include "blockmf/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "blockmf/error.hpp"

namespace blockmf {
namespace {

void check_pair(const Measure& mu, const Measure& nu) {
  require(mu.size() == nu.size(), ErrorKind::kInvalidArgument, "measures live on different color sets");
  require(mu.size() > 0, ErrorKind::kInvalidArgument, "empty measure");
}

}  // namespace

double w1_discrete(const Measure& mu, const Measure& nu) {
  check_pair(mu, nu);
  double fm = 0.0, fn = 0.0, total = 0.0;
  for (size_t k = 0; k + 1 < mu.size(); ++k) {
    fm += mu[k];
    fn += nu[k];
    total += std::abs(fm - fn);
  }
  return total;
}

// The constraint matrix is totally unimodular with integer bounds, so an
// optimal g takes values in {-1, 0, 1} with unit steps between neighbors.
// A three-state dynamic program over z finds it exactly for any K.
double d_bl(const Measure& mu, const Measure& nu) {
  check_pair(mu, nu);
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::array<double, 3> best{};
  for (int v = 0; v < 3; ++v) best[static_cast<size_t>(v)] = (v - 1) * (mu[0] - nu[0]);
  for (size_t z = 1; z < mu.size(); ++z) {
    const double d = mu[z] - nu[z];
    std::array<double, 3> next{kNone, kNone, kNone};
    for (int v = 0; v < 3; ++v) {
      for (int u = std::max(0, v - 1); u <= std::min(2, v + 1); ++u) {
        next[static_cast<size_t>(v)] = std::max(next[static_cast<size_t>(v)], best[static_cast<size_t>(u)]);
      }
      next[static_cast<size_t>(v)] += (v - 1) * d;
    }
    best = next;
  }
  return std::max(0.0, *std::max_element(best.begin(), best.end()));
}

double total_variation(const Measure& mu, const Measure& nu) {
  check_pair(mu, nu);
  return 0.5 * l1_distance(mu, nu);
}

double relative_entropy(const Measure& p, const Measure& q) {
  check_pair(p, q);
  double h = 0.0;
  for (size_t z = 0; z < p.size(); ++z) {
    if (p[z] <= 0.0) continue;
    if (q[z] <= 0.0) return std::numeric_limits<double>::infinity();
    h += p[z] * std::log(p[z] / q[z]);
  }
  return h;
}

}  // namespace blockmf
