#include "blockmf/measure.hpp"

#include <cmath>

#include <fmt/format.h>

#include "blockmf/error.hpp"

namespace blockmf {

void Measure::require_probability(double tol) const {
  require(!w_.empty(), ErrorKind::kInvalidArgument, "empty measure");
  for (std::size_t z = 0; z < w_.size(); ++z) {
    require(w_[z] >= 0.0 && std::isfinite(w_[z]), ErrorKind::kInvalidArgument,
            fmt::format("measure entry {} is {}", z, w_[z]));
  }
  require(std::abs(mass() - 1.0) <= tol, ErrorKind::kInvalidArgument,
          fmt::format("measure sums to {:.17g}, not 1", mass()));
}

double l1_distance(const Measure& a, const Measure& b) {
  require(a.size() == b.size(), ErrorKind::kInvalidArgument,
          fmt::format("measures on {} and {} colors", a.size(), b.size()));
  double s = 0.0;
  for (std::size_t z = 0; z < a.size(); ++z) s += std::abs(a[z] - b[z]);
  return s;
}

}  // namespace blockmf
