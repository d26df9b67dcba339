#include "blockmf/mean_field.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "blockmf/error.hpp"
#include "blockmf/particle_sim.hpp"

namespace blockmf {
namespace {

using Rates = std::vector<std::vector<double>>;

void check_inputs(const RateModel& model, const ProportionTargets& targets, std::span<const Measure> init) {
  targets.validate();
  model.check_blocks(targets.block_count());
  require(static_cast<int>(init.size()) == 2 * targets.block_count(), ErrorKind::kInvalidArgument,
          fmt::format("need {} initial measures, got {}", 2 * targets.block_count(), init.size()));
  for (const auto& m : init) {
    require(static_cast<int>(m.size()) == model.colors(), ErrorKind::kInvalidArgument,
            "initial measure has the wrong number of colors");
    m.require_probability(1e-9);
  }
}

// out[c] = A*(rates[c]) y[c], mass drift removed exactly.
void linear_drift(const RateModel& model, const Rates& rates, const std::vector<Measure>& y,
                  std::vector<Measure>& out) {
  const int comps = static_cast<int>(y.size());
  for (int c = 0; c < comps; ++c) {
    const RateSpec& spec = model.spec(c / 2, static_cast<NodeClass>(c % 2));
    const auto& g = spec.color_graph();
    Measure& d = out[static_cast<size_t>(c)];
    std::fill(d.weights().begin(), d.weights().end(), 0.0);
    const Measure& m = y[static_cast<size_t>(c)];
    for (int e = 0; e < g.edge_count(); ++e) {
      const auto& edge = g.edge(e);
      const double flux = m[static_cast<size_t>(edge.from)] * rates[static_cast<size_t>(c)][static_cast<size_t>(e)];
      d[static_cast<size_t>(edge.from)] -= flux;
      d[static_cast<size_t>(edge.to)] += flux;
    }
  }
}

void center(Measure& increment) {
  const double shift = increment.mass() / static_cast<double>(increment.size());
  for (auto& v : increment.weights()) v -= shift;
}

std::vector<Measure> axpy(const std::vector<Measure>& y, double h, const std::vector<Measure>& k) {
  std::vector<Measure> out = y;
  for (size_t c = 0; c < y.size(); ++c) {
    for (size_t z = 0; z < y[c].size(); ++z) out[c][z] += h * k[c][z];
  }
  return out;
}

// y <- y + dt/6 (k1 + 2k2 + 2k3 + k4), increment centered per component.
void rk4_combine(std::vector<Measure>& y, double dt, const std::vector<Measure>& k1,
                 const std::vector<Measure>& k2, const std::vector<Measure>& k3,
                 const std::vector<Measure>& k4) {
  for (size_t c = 0; c < y.size(); ++c) {
    Measure inc(y[c].size());
    for (size_t z = 0; z < y[c].size(); ++z) {
      inc[z] = dt / 6.0 * (k1[c][z] + 2.0 * k2[c][z] + 2.0 * k3[c][z] + k4[c][z]);
    }
    center(inc);
    for (size_t z = 0; z < y[c].size(); ++z) y[c][z] += inc[z];
  }
}

void check_finite(const std::vector<Measure>& y, double t) {
  for (const auto& m : y) {
    for (double v : m.weights()) {
      if (!std::isfinite(v)) fail(ErrorKind::kNumericalBlowup, fmt::format("non-finite state at t = {}", t));
    }
  }
}

}  // namespace

Measure GeneratorMatrix::adjoint(const Measure& mu) const {
  Measure out(static_cast<size_t>(k_));
  for (int z = 0; z < k_; ++z) {
    for (int zp = 0; zp < k_; ++zp) out[static_cast<size_t>(zp)] += mu[static_cast<size_t>(z)] * (*this)(z, zp);
  }
  return out;
}

std::vector<double> GeneratorMatrix::apply(std::span<const double> phi) const {
  std::vector<double> out(static_cast<size_t>(k_), 0.0);
  for (int z = 0; z < k_; ++z) {
    for (int zp = 0; zp < k_; ++zp) out[static_cast<size_t>(z)] += (*this)(z, zp) * phi[static_cast<size_t>(zp)];
  }
  return out;
}

namespace {

GeneratorMatrix assemble(const RateSpec& spec, const std::vector<double>& rates) {
  const auto& g = spec.color_graph();
  GeneratorMatrix a(g.colors());
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edge(e);
    a(edge.from, edge.to) = rates[static_cast<size_t>(e)];
    a(edge.from, edge.from) -= rates[static_cast<size_t>(e)];
  }
  return a;
}

}  // namespace

GeneratorMatrix generator_c(const RateSpec& spec, const Measure& mu_c, const Measure& mu_p, double p_c,
                            double p_p) {
  const auto& g = spec.color_graph();
  std::vector<double> rates(static_cast<size_t>(g.edge_count()));
  for (int e = 0; e < g.edge_count(); ++e) rates[static_cast<size_t>(e)] = lambda_c(spec, mu_c, mu_p, p_c, p_p, g.edge(e));
  return assemble(spec, rates);
}

GeneratorMatrix generator_p(const RateSpec& spec, const Measure& mu_c, std::span<const Measure> mus,
                            double alpha_c, std::span<const double> q_row) {
  const auto& g = spec.color_graph();
  std::vector<double> rates(static_cast<size_t>(g.edge_count()));
  for (int e = 0; e < g.edge_count(); ++e) rates[static_cast<size_t>(e)] = lambda_p(spec, mu_c, mus, alpha_c, q_row, g.edge(e));
  return assemble(spec, rates);
}

std::vector<std::vector<double>> mean_field_rates(const RateModel& model, const ProportionTargets& targets,
                                                  std::span<const Measure> state) {
  const int r = targets.block_count();
  Rates rates(static_cast<size_t>(2 * r));
  for (int j = 0; j < r; ++j) {
    const auto ju = static_cast<size_t>(j);
    const Measure& mc = state[static_cast<size_t>(2 * j)];
    const Measure& mp = state[static_cast<size_t>(2 * j + 1)];
    {
      const RateSpec& spec = model.spec(j, NodeClass::kCentral);
      auto& out = rates[static_cast<size_t>(2 * j)];
      out.resize(static_cast<size_t>(spec.color_graph().edge_count()));
      for (int e = 0; e < spec.color_graph().edge_count(); ++e) {
        const double affine = targets.p_c[ju] * spec.integral_c(e, mc.weights()) +
                              targets.p_p[ju] * spec.integral_p(e, mp.weights());
        out[static_cast<size_t>(e)] = spec.finish(e, affine);
      }
    }
    {
      const RateSpec& spec = model.spec(j, NodeClass::kPeripheral);
      auto& out = rates[static_cast<size_t>(2 * j + 1)];
      out.resize(static_cast<size_t>(spec.color_graph().edge_count()));
      for (int e = 0; e < spec.color_graph().edge_count(); ++e) {
        double affine = targets.alpha_c[ju] * spec.integral_c(e, mc.weights());
        for (int i = 0; i < r; ++i) {
          affine += targets.q[ju][static_cast<size_t>(i)] * spec.integral_p(e, state[static_cast<size_t>(2 * i + 1)].weights());
        }
        out[static_cast<size_t>(e)] = spec.finish(e, affine);
      }
    }
  }
  return rates;
}

std::vector<Measure> mean_field_drift(const RateModel& model, const ProportionTargets& targets,
                                      std::span<const Measure> state) {
  std::vector<Measure> y(state.begin(), state.end());
  std::vector<Measure> out(y.size(), Measure(static_cast<size_t>(model.colors())));
  linear_drift(model, mean_field_rates(model, targets, state), y, out);
  return out;
}

MeanFieldFlow::MeanFieldFlow(double dt, int blocks, int colors) : dt_(dt), blocks_(blocks), colors_(colors) {}

void MeanFieldFlow::push_back(double t, std::span<const Measure> state) {
  require(static_cast<int>(state.size()) == components(), ErrorKind::kInternal, "flow state size mismatch");
  times_.push_back(t);
  for (const auto& m : state) data_.insert(data_.end(), m.vec().begin(), m.vec().end());
}

std::span<const double> MeanFieldFlow::raw(int i, int comp) const {
  const auto offset = (static_cast<size_t>(i) * static_cast<size_t>(components()) + static_cast<size_t>(comp)) *
                      static_cast<size_t>(colors_);
  return std::span<const double>(data_).subspan(offset, static_cast<size_t>(colors_));
}

Measure MeanFieldFlow::measure(int i, int comp) const {
  const auto r = raw(i, comp);
  Measure m(static_cast<size_t>(colors_));
  for (size_t z = 0; z < r.size(); ++z) m[z] = std::max(0.0, r[z]);
  return m;
}

std::vector<Measure> MeanFieldFlow::state(int i) const {
  std::vector<Measure> out;
  out.reserve(static_cast<size_t>(components()));
  for (int c = 0; c < components(); ++c) out.push_back(measure(i, c));
  return out;
}

std::vector<Measure> MeanFieldFlow::interpolate(double t) const {
  require(points() > 0, ErrorKind::kInvalidArgument, "empty flow");
  require(t >= 0.0 && t <= horizon() * (1.0 + 1e-12), ErrorKind::kInvalidArgument,
          fmt::format("time {} outside the flow's range [0, {}]", t, horizon()));
  if (points() == 1) return state(0);
  int i = std::min(static_cast<int>(t / dt_), points() - 2);
  const double w = std::clamp((t - time(i)) / (time(i + 1) - time(i)), 0.0, 1.0);
  std::vector<Measure> out;
  out.reserve(static_cast<size_t>(components()));
  for (int c = 0; c < components(); ++c) {
    const auto a = raw(i, c);
    const auto b = raw(i + 1, c);
    Measure m(static_cast<size_t>(colors_));
    for (size_t z = 0; z < a.size(); ++z) m[z] = std::max(0.0, (1.0 - w) * a[z] + w * b[z]);
    out.push_back(std::move(m));
  }
  return out;
}

int step_count(double horizon, double dt) {
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::kInvalidArgument, "dt must be positive");
  require(horizon >= 0.0 && std::isfinite(horizon), ErrorKind::kInvalidArgument, "horizon must be >= 0");
  const double ratio = horizon / dt;
  require(ratio < 1e8, ErrorKind::kCapacity, "too many time steps");
  return static_cast<int>(std::ceil(ratio - 1e-9));
}

double default_dt(const RateModel& model) { return 0.01 / std::max(1.0, model.gamma_bar()); }

MeanFieldFlow solve_mckean_vlasov(const RateModel& model, const ProportionTargets& targets,
                                  std::span<const Measure> init, double horizon, double dt) {
  check_inputs(model, targets, init);
  const int steps = step_count(horizon, dt);
  const double h = steps > 0 ? horizon / steps : dt;
  MeanFieldFlow flow(h, targets.block_count(), model.colors());
  std::vector<Measure> y(init.begin(), init.end());
  flow.push_back(0.0, y);
  auto f = [&](const std::vector<Measure>& s) { return mean_field_drift(model, targets, s); };
  for (int n = 0; n < steps; ++n) {
    const auto k1 = f(y);
    const auto k2 = f(axpy(y, h / 2, k1));
    const auto k3 = f(axpy(y, h / 2, k2));
    const auto k4 = f(axpy(y, h, k3));
    rk4_combine(y, h, k1, k2, k3, k4);
    const double t = n + 1 == steps ? horizon : (n + 1) * h;
    check_finite(y, t);
    flow.push_back(t, y);
  }
  return flow;
}

double flow_distance(const MeanFieldFlow& a, const MeanFieldFlow& b) {
  require(a.points() == b.points() && a.components() == b.components() && a.colors() == b.colors(),
          ErrorKind::kInvalidArgument, "flows are on different grids");
  double worst = 0.0;
  for (int i = 0; i < a.points(); ++i) {
    for (int c = 0; c < a.components(); ++c) {
      const auto x = a.raw(i, c);
      const auto y = b.raw(i, c);
      double d = 0.0;
      for (size_t z = 0; z < x.size(); ++z) d += std::abs(x[z] - y[z]);
      worst = std::max(worst, d);
    }
  }
  return worst;
}

namespace {

// phi(M): the forward equations with rates frozen along `frozen`.
MeanFieldFlow picard_map(const RateModel& model, const ProportionTargets& targets, std::span<const Measure> init,
                         const MeanFieldFlow& frozen, FrozenInterpolation interpolation) {
  const int points = frozen.points();
  const double h = frozen.dt();
  MeanFieldFlow next(h, frozen.blocks(), frozen.colors());
  std::vector<Measure> y(init.begin(), init.end());
  next.push_back(0.0, y);

  std::vector<std::vector<Measure>> grid_states;
  std::vector<Rates> grid_rates;
  std::vector<std::vector<Measure>> grid_drift;
  grid_states.reserve(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i) {
    grid_states.push_back(frozen.state(i));
    grid_rates.push_back(mean_field_rates(model, targets, grid_states.back()));
    if (interpolation == FrozenInterpolation::kHermite) {
      grid_drift.push_back(mean_field_drift(model, targets, grid_states.back()));
    }
  }

  std::vector<Measure> k1(y.size(), Measure(static_cast<size_t>(frozen.colors())));
  auto k2 = k1, k3 = k1, k4 = k1;
  for (int n = 0; n + 1 < points; ++n) {
    const auto& a = grid_states[static_cast<size_t>(n)];
    const auto& b = grid_states[static_cast<size_t>(n + 1)];
    const double step = frozen.time(n + 1) - frozen.time(n);
    std::vector<Measure> mid(a.size(), Measure(static_cast<size_t>(frozen.colors())));
    for (size_t c = 0; c < a.size(); ++c) {
      for (size_t z = 0; z < a[c].size(); ++z) {
        double v = 0.5 * (a[c][z] + b[c][z]);
        if (interpolation == FrozenInterpolation::kHermite) {
          v += step / 8.0 * (grid_drift[static_cast<size_t>(n)][c][z] - grid_drift[static_cast<size_t>(n + 1)][c][z]);
        }
        mid[c][z] = std::max(0.0, v);
      }
    }
    const Rates mid_rates = mean_field_rates(model, targets, mid);
    linear_drift(model, grid_rates[static_cast<size_t>(n)], y, k1);
    linear_drift(model, mid_rates, axpy(y, step / 2, k1), k2);
    linear_drift(model, mid_rates, axpy(y, step / 2, k2), k3);
    linear_drift(model, grid_rates[static_cast<size_t>(n + 1)], axpy(y, step, k3), k4);
    rk4_combine(y, step, k1, k2, k3, k4);
    check_finite(y, frozen.time(n + 1));
    next.push_back(frozen.time(n + 1), y);
  }
  return next;
}

}  // namespace

PicardResult picard_iterate(const RateModel& model, const ProportionTargets& targets,
                            std::span<const Measure> init, double horizon, double dt, double tol,
                            int max_iter, const MeanFieldFlow* guess, FrozenInterpolation interpolation) {
  check_inputs(model, targets, init);
  require(tol > 0.0, ErrorKind::kInvalidArgument, "tolerance must be positive");
  require(max_iter >= 1, ErrorKind::kInvalidArgument, "max_iter must be >= 1");
  const int steps = step_count(horizon, dt);
  const double h = steps > 0 ? horizon / steps : dt;

  MeanFieldFlow current(h, targets.block_count(), model.colors());
  if (guess != nullptr) {
    require(guess->points() == steps + 1 && guess->components() == current.components() &&
                guess->colors() == current.colors(),
            ErrorKind::kInvalidArgument, "initial guess is on a different grid");
    current = *guess;
  } else {
    for (int n = 0; n <= steps; ++n) current.push_back(n == steps ? horizon : n * h, init);
  }

  PicardResult result;
  for (int k = 0; k < max_iter; ++k) {
    MeanFieldFlow next = picard_map(model, targets, init, current, interpolation);
    const double residual = flow_distance(next, current);
    result.residuals.push_back(residual);
    current = std::move(next);
    if (residual < tol) {
      result.flow = std::move(current);
      return result;
    }
  }
  throw NonConvergenceError(
      fmt::format("Picard iteration did not reach {} in {} iterations (last residual {})", tol, max_iter,
                  result.residuals.back()),
      result.residuals);
}

int ColorPath::color_at(double t) const {
  int color = initial;
  for (const auto& j : jumps) {
    if (j.time > t) break;
    color = j.to;
  }
  return color;
}

std::vector<ColorPath> simulate_limit_particle(const RateModel& model, const ProportionTargets& targets,
                                               const MeanFieldFlow& flow, std::span<const int> init_colors,
                                               Philox& rng) {
  targets.validate();
  model.check_blocks(targets.block_count());
  const int comps = 2 * targets.block_count();
  require(flow.components() == comps && flow.colors() == model.colors(), ErrorKind::kInvalidArgument,
          "flow does not match the model");
  require(static_cast<int>(init_colors.size()) == comps, ErrorKind::kInvalidArgument,
          "need one initial color per (block, class)");
  const double horizon = flow.horizon();

  std::vector<ColorPath> paths(static_cast<size_t>(comps));
  for (int c = 0; c < comps; ++c) {
    const RateSpec& spec = model.spec(c / 2, static_cast<NodeClass>(c % 2));
    const auto& g = spec.color_graph();
    const int x0 = init_colors[static_cast<size_t>(c)];
    require(x0 >= 0 && x0 < g.colors(), ErrorKind::kInvalidArgument, "initial color out of range");
    int max_out = 0;
    for (int z = 0; z < g.colors(); ++z) max_out = std::max(max_out, g.out_degree(z));
    const double bound = spec.gamma_bar() * max_out;

    ColorPath& path = paths[static_cast<size_t>(c)];
    path.initial = x0;
    path.horizon = horizon;
    int x = x0;
    double t = 0.0;
    if (bound <= 0.0) continue;
    while (true) {
      t += rng.exponential(bound);
      if (t > horizon) break;
      const auto state = flow.interpolate(t);
      const auto rates = mean_field_rates(model, targets, state);
      const auto& row = rates[static_cast<size_t>(c)];
      double u = rng.uniform() * bound;
      double total = 0.0;
      for (int e : g.out_edges(x)) total += row[static_cast<size_t>(e)];
      require(total <= bound * (1.0 + 1e-9), ErrorKind::kInternal, "exit rate exceeds the thinning bound");
      for (int e : g.out_edges(x)) {
        u -= row[static_cast<size_t>(e)];
        if (u < 0.0) {
          const int to = g.edge(e).to;
          path.jumps.push_back({t, x, to});
          x = to;
          break;
        }
      }
    }
  }
  return paths;
}

}  // namespace blockmf
