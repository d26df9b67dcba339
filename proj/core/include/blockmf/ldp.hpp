#pragma once

#include <span>
#include <vector>

#include "blockmf/block_graph.hpp"
#include "blockmf/mean_field.hpp"
#include "blockmf/measure.hpp"
#include "blockmf/rate_model.hpp"
#include "blockmf/rng.hpp"

namespace blockmf {

/// Log-Laplace transform of a centered unit Poisson variable: e^u - u - 1.
double tau(double u);
/// Legendre transform of tau: (u+1) log(u+1) - u for u > -1, 1 at -1, +inf below.
double tau_star(double u);

/// Time-dependent jump rates l[comp][grid point][edge] on a flow's grid.
class RateFamily {
 public:
  RateFamily() = default;
  /// Zero rates for every component of `model` over `times`.
  RateFamily(const RateModel& model, int blocks, std::vector<double> times);

  /// The mean-field rates evaluated along `flow`.
  static RateFamily from_flow(const RateModel& model, const ProportionTargets& targets, const MeanFieldFlow& flow);

  int components() const { return static_cast<int>(rates_.size()); }
  int points() const { return static_cast<int>(times_.size()); }
  const std::vector<double>& times() const { return times_; }

  double at(int comp, int point, int edge) const {
    return rates_[static_cast<size_t>(comp)][static_cast<size_t>(point)][static_cast<size_t>(edge)];
  }
  double& at(int comp, int point, int edge) {
    return rates_[static_cast<size_t>(comp)][static_cast<size_t>(point)][static_cast<size_t>(edge)];
  }
  std::span<const double> row(int comp, int point) const {
    return rates_[static_cast<size_t>(comp)][static_cast<size_t>(point)];
  }

  /// Throws kInvalidArgument on negative or non-finite entries.
  void validate() const;

 private:
  std::vector<double> times_;
  std::vector<std::vector<std::vector<double>>> rates_;
};

struct DeviationCost {
  double total = 0.0;
  std::vector<double> times;
  /// integrand[comp][grid point]
  std::vector<std::vector<double>> integrand;
  std::vector<double> integrals;
  /// alpha_j p_j^c and alpha_j p_j^p in component order.
  std::vector<double> weights;
};

/// sum over edges of mu(z) lambda tau*(l / lambda - 1); l = 0 uses tau*(-1) = 1.
double legendre_integrand(const ColorGraph& graph, const Measure& mu, std::span<const double> lambda,
                          std::span<const double> l);

/// Rate function in Legendre form, trapezoidal in time. Every mean-field rate
/// must be at least `rate_floor` (> 0), else kAssumptionViolation.
DeviationCost legendre_cost(const MeanFieldFlow& flow, const ProportionTargets& targets, const RateModel& model,
                            const RateFamily& family, double rate_floor = 1e-9);

/// sup over Phi of sum theta Phi - sum_e tau(Phi(z') - Phi(z)) mu(z) lambda_e.
/// +infinity when theta does not sum to zero (within 1e-10) on every set of
/// colors linked by positive-weight edges, or when the supremum is unbounded.
/// Damped Newton with the gauge Phi = 0 on one color per linked set.
double variational_norm(const ColorGraph& graph, std::span<const double> theta, const Measure& mu,
                        std::span<const double> lambda);

/// Rate function in variational form. The time derivative uses central
/// differences inside the grid and second-order one-sided ones at the ends.
DeviationCost variational_cost(const MeanFieldFlow& flow, const ProportionTargets& targets, const RateModel& model);

/// Flow of mu' = L(t)* mu where L(t) interpolates `family` linearly.
MeanFieldFlow integrate_rate_family(const RateModel& model, const RateFamily& family, std::span<const Measure> init);

/// Log-density h of the law with the flow's mean-field rates for component
/// (block, cls) against the reference law that jumps along every edge at rate
/// 1. The compensator subtracts the reference exit rate out_degree(x_t).
/// Returns -infinity for a jump along an edge whose rate vanishes.
double girsanov_log_density(const ColorPath& path, const MeanFieldFlow& flow, const ProportionTargets& targets,
                            const RateModel& model, int block, NodeClass cls);

/// Same, with the rates of component `comp` read from a precomputed family.
double girsanov_log_density(const ColorPath& path, const RateFamily& rates, const ColorGraph& graph, int comp);

/// Path of the reference law on [0, horizon].
ColorPath sample_reference_path(const ColorGraph& graph, int initial, double horizon, Philox& rng);

/// sum over components of (class size / N) times the average log-density of
/// that component's sample paths. `paths` and `class_sizes` are in component order.
double h_functional(std::span<const std::vector<ColorPath>> paths, const MeanFieldFlow& flow,
                    const ProportionTargets& targets, const RateModel& model, std::span<const int> class_sizes);

}  // namespace blockmf
