#pragma once

#include <optional>
#include <span>
#include <vector>

#include "blockmf/block_graph.hpp"
#include "blockmf/measure.hpp"
#include "blockmf/rate_model.hpp"
#include "blockmf/rng.hpp"

namespace blockmf {

/// K x K rate matrix: off-diagonals are edge rates, rows sum to zero.
class GeneratorMatrix {
 public:
  explicit GeneratorMatrix(int colors) : k_(colors), a_(static_cast<size_t>(colors * colors), 0.0) {}

  int colors() const { return k_; }
  double operator()(int z, int zp) const { return a_[static_cast<size_t>(z * k_ + zp)]; }
  double& operator()(int z, int zp) { return a_[static_cast<size_t>(z * k_ + zp)]; }

  /// A* mu, i.e. (mu^T A)^T.
  Measure adjoint(const Measure& mu) const;
  /// A phi.
  std::vector<double> apply(std::span<const double> phi) const;

 private:
  int k_;
  std::vector<double> a_;
};

GeneratorMatrix generator_c(const RateSpec& spec, const Measure& mu_c, const Measure& mu_p, double p_c,
                            double p_p);
GeneratorMatrix generator_p(const RateSpec& spec, const Measure& mu_c, std::span<const Measure> mus,
                            double alpha_c, std::span<const double> q_row);

/// Per-edge rates of every component evaluated at a mean-field state
/// (2r measures in component order). rates[comp][edge].
std::vector<std::vector<double>> mean_field_rates(const RateModel& model, const ProportionTargets& targets,
                                                  std::span<const Measure> state);

/// Right-hand side of the McKean-Vlasov system: A*_{comp}(state) state_comp.
std::vector<Measure> mean_field_drift(const RateModel& model, const ProportionTargets& targets,
                                      std::span<const Measure> state);

/// Mean-field flow on a uniform grid t_i = i * dt, i = 0..steps.
class MeanFieldFlow {
 public:
  MeanFieldFlow() = default;
  MeanFieldFlow(double dt, int blocks, int colors);

  int points() const { return static_cast<int>(times_.size()); }
  int blocks() const { return blocks_; }
  int colors() const { return colors_; }
  int components() const { return 2 * blocks_; }
  double dt() const { return dt_; }
  double time(int i) const { return times_[static_cast<size_t>(i)]; }
  double horizon() const { return times_.empty() ? 0.0 : times_.back(); }
  const std::vector<double>& times() const { return times_; }

  void push_back(double t, std::span<const Measure> state);

  /// Stored values (may carry roundoff below zero).
  std::span<const double> raw(int i, int comp) const;
  /// Stored value with negative entries clipped to 0.
  Measure measure(int i, int comp) const;
  std::vector<Measure> state(int i) const;
  /// Piecewise-linear interpolation in time, clipped.
  std::vector<Measure> interpolate(double t) const;

 private:
  double dt_ = 0.0;
  int blocks_ = 0;
  int colors_ = 0;
  std::vector<double> times_;
  std::vector<double> data_;  // [point][comp][color]
};

/// Number of uniform steps covering [0, horizon] with step at most dt.
int step_count(double horizon, double dt);

/// Default step 0.01 / max(1, gamma_bar).
double default_dt(const RateModel& model);

/// Classical fourth-order Runge-Kutta integration of the coupled 2rK system.
/// The step is shrunk to horizon / ceil(horizon / dt) so the grid ends at T.
MeanFieldFlow solve_mckean_vlasov(const RateModel& model, const ProportionTargets& targets,
                                  std::span<const Measure> init, double horizon, double dt);

/// sup over grid points of the max over components of the L1 distance.
double flow_distance(const MeanFieldFlow& a, const MeanFieldFlow& b);

enum class FrozenInterpolation {
  kLinear,
  /// Cubic Hermite using the frozen flow's own drift as the derivative.
  kHermite,
};

struct PicardResult {
  MeanFieldFlow flow;
  std::vector<double> residuals;
};

/// Fixed-point iteration M_{k+1} = phi(M_k): each step solves the linear
/// forward equations whose rates are frozen to M_k. Starts from `guess`, or
/// from the flow that stays at `init` when no guess is given.
PicardResult picard_iterate(const RateModel& model, const ProportionTargets& targets,
                            std::span<const Measure> init, double horizon, double dt, double tol,
                            int max_iter, const MeanFieldFlow* guess = nullptr,
                            FrozenInterpolation interpolation = FrozenInterpolation::kHermite);

/// Single-particle path on [0, horizon].
struct ColorPath {
  struct Jump {
    double time;
    int from;
    int to;
  };
  int initial = 0;
  std::vector<Jump> jumps;
  double horizon = 0.0;

  int color_at(double t) const;
};

/// One path per component of the limit system driven by `flow`. Jumps are
/// drawn by thinning against the largest possible exit rate.
std::vector<ColorPath> simulate_limit_particle(const RateModel& model, const ProportionTargets& targets,
                                               const MeanFieldFlow& flow, std::span<const int> init_colors,
                                               Philox& rng);

}  // namespace blockmf
