#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace blockmf {

/// Nonnegative weights on the colors {0, ..., K-1}. Probability measures are
/// the common case; signed residuals reuse the same storage.
class Measure {
 public:
  Measure() = default;
  explicit Measure(std::size_t colors, double fill = 0.0) : w_(colors, fill) {}
  explicit Measure(std::vector<double> weights) : w_(std::move(weights)) {}
  Measure(std::initializer_list<double> weights) : w_(weights) {}

  static Measure delta(std::size_t colors, int color) {
    Measure m(colors);
    m.w_.at(static_cast<std::size_t>(color)) = 1.0;
    return m;
  }
  static Measure uniform(std::size_t colors) {
    return Measure(colors, 1.0 / static_cast<double>(colors));
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t z) const { return w_[z]; }
  double& operator[](std::size_t z) { return w_[z]; }
  std::span<const double> weights() const { return w_; }
  std::span<double> weights() { return w_; }
  const std::vector<double>& vec() const { return w_; }

  double mass() const {
    double s = 0.0;
    for (double v : w_) s += v;
    return s;
  }
  double mean() const {
    double s = 0.0;
    for (std::size_t z = 0; z < w_.size(); ++z) s += static_cast<double>(z) * w_[z];
    return s;
  }

  /// Throws kInvalidArgument unless entries are >= 0 and sum to 1 within `tol`.
  void require_probability(double tol = 1e-12) const;

  friend bool operator==(const Measure&, const Measure&) = default;

 private:
  std::vector<double> w_;
};

double l1_distance(const Measure& a, const Measure& b);

}  // namespace blockmf
