#include "blockmf/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "blockmf/error.hpp"
#include "blockmf/particle_sim.hpp"

namespace blockmf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassTol = 1e-10;
constexpr int kMaxNewton = 200;

double trapezoid(std::span<const double> t, std::span<const double> f) {
  double s = 0.0;
  for (size_t i = 0; i + 1 < t.size(); ++i) s += 0.5 * (t[i + 1] - t[i]) * (f[i] + f[i + 1]);
  return s;
}

const RateSpec& component_spec(const RateModel& model, int comp) {
  return model.spec(comp / 2, static_cast<NodeClass>(comp % 2));
}

std::vector<double> class_weights(const ProportionTargets& targets) {
  std::vector<double> w;
  for (int j = 0; j < targets.block_count(); ++j) {
    const auto ju = static_cast<size_t>(j);
    w.push_back(targets.alpha[ju] * targets.p_c[ju]);
    w.push_back(targets.alpha[ju] * targets.p_p[ju]);
  }
  return w;
}

void check_flow(const MeanFieldFlow& flow, const ProportionTargets& targets, const RateModel& model) {
  targets.validate();
  model.check_blocks(targets.block_count());
  require(flow.blocks() == targets.block_count() && flow.colors() == model.colors(), ErrorKind::kInvalidArgument,
          "flow does not match the model and targets");
  require(flow.points() >= 2, ErrorKind::kInvalidArgument, "flow needs at least two grid points");
}

DeviationCost finish_cost(const MeanFieldFlow& flow, const ProportionTargets& targets,
                          std::vector<std::vector<double>> integrand) {
  DeviationCost cost;
  cost.times = flow.times();
  cost.weights = class_weights(targets);
  cost.integrand = std::move(integrand);
  for (size_t c = 0; c < cost.integrand.size(); ++c) {
    cost.integrals.push_back(trapezoid(cost.times, cost.integrand[c]));
    cost.total += cost.weights[c] * cost.integrals.back();
  }
  return cost;
}

// Small dense Cholesky solve of M x = b; false when M is not positive definite.
bool cholesky_solve(std::vector<double> m, std::vector<double>& b, size_t n) {
  for (size_t j = 0; j < n; ++j) {
    double d = m[j * n + j];
    for (size_t k = 0; k < j; ++k) d -= m[j * n + k] * m[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    m[j * n + j] = d;
    for (size_t i = j + 1; i < n; ++i) {
      double v = m[i * n + j];
      for (size_t k = 0; k < j; ++k) v -= m[i * n + k] * m[j * n + k];
      m[i * n + j] = v / d;
    }
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < i; ++k) b[i] -= m[i * n + k] * b[k];
    b[i] /= m[i * n + i];
  }
  for (size_t i = n; i-- > 0;) {
    for (size_t k = i + 1; k < n; ++k) b[i] -= m[k * n + i] * b[k];
    b[i] /= m[i * n + i];
  }
  return true;
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<size_t>(x)] != x) {
    parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
    x = parent[static_cast<size_t>(x)];
  }
  return x;
}

}  // namespace

double tau(double u) { return std::expm1(u) - u; }

double tau_star(double u) {
  if (std::isnan(u)) return u;
  if (u < -1.0) return kInf;
  if (u == -1.0) return 1.0;
  if (u == kInf) return kInf;
  return (u + 1.0) * std::log1p(u) - u;
}

RateFamily::RateFamily(const RateModel& model, int blocks, std::vector<double> times) : times_(std::move(times)) {
  model.check_blocks(blocks);
  rates_.resize(static_cast<size_t>(2 * blocks));
  for (int c = 0; c < 2 * blocks; ++c) {
    const auto edges = static_cast<size_t>(component_spec(model, c).color_graph().edge_count());
    rates_[static_cast<size_t>(c)].assign(times_.size(), std::vector<double>(edges, 0.0));
  }
}

RateFamily RateFamily::from_flow(const RateModel& model, const ProportionTargets& targets, const MeanFieldFlow& flow) {
  RateFamily family(model, targets.block_count(), flow.times());
  for (int i = 0; i < flow.points(); ++i) {
    const auto rates = mean_field_rates(model, targets, flow.state(i));
    for (int c = 0; c < family.components(); ++c) {
      family.rates_[static_cast<size_t>(c)][static_cast<size_t>(i)] = rates[static_cast<size_t>(c)];
    }
  }
  return family;
}

void RateFamily::validate() const {
  for (const auto& comp : rates_) {
    for (const auto& row : comp) {
      for (double v : row) {
        require(std::isfinite(v) && v >= 0.0, ErrorKind::kInvalidArgument, "rate family entries must be finite and >= 0");
      }
    }
  }
}

double legendre_integrand(const ColorGraph& graph, const Measure& mu, std::span<const double> lambda,
                          std::span<const double> l) {
  double s = 0.0;
  for (int e = 0; e < graph.edge_count(); ++e) {
    const double w = mu[static_cast<size_t>(graph.edge(e).from)] * lambda[static_cast<size_t>(e)];
    if (w == 0.0) continue;
    const double le = l[static_cast<size_t>(e)];
    s += w * (le == 0.0 ? 1.0 : tau_star(le / lambda[static_cast<size_t>(e)] - 1.0));
  }
  return s;
}

DeviationCost legendre_cost(const MeanFieldFlow& flow, const ProportionTargets& targets, const RateModel& model,
                            const RateFamily& family, double rate_floor) {
  check_flow(flow, targets, model);
  require(rate_floor > 0.0, ErrorKind::kInvalidArgument, "rate floor must be positive");
  require(family.points() == flow.points() && family.components() == flow.components(),
          ErrorKind::kInvalidArgument, "rate family and flow are on different grids");
  family.validate();
  std::vector<std::vector<double>> integrand(static_cast<size_t>(flow.components()),
                                             std::vector<double>(static_cast<size_t>(flow.points())));
  for (int i = 0; i < flow.points(); ++i) {
    const auto state = flow.state(i);
    const auto rates = mean_field_rates(model, targets, state);
    for (int c = 0; c < flow.components(); ++c) {
      const auto& graph = component_spec(model, c).color_graph();
      const auto& lambda = rates[static_cast<size_t>(c)];
      for (int e = 0; e < graph.edge_count(); ++e) {
        if (lambda[static_cast<size_t>(e)] < rate_floor) {
          fail(ErrorKind::kAssumptionViolation,
               fmt::format("rate {} on edge ({},{}) of block {} {} at t = {} is below the floor {}",
                           lambda[static_cast<size_t>(e)], graph.edge(e).from, graph.edge(e).to, c / 2,
                           c % 2 == 0 ? "central" : "peripheral", flow.time(i), rate_floor));
        }
      }
      integrand[static_cast<size_t>(c)][static_cast<size_t>(i)] =
          legendre_integrand(graph, state[static_cast<size_t>(c)], lambda, family.row(c, i));
    }
  }
  return finish_cost(flow, targets, std::move(integrand));
}

double variational_norm(const ColorGraph& graph, std::span<const double> theta, const Measure& mu,
                        std::span<const double> lambda) {
  const int k = graph.colors();
  require(static_cast<int>(theta.size()) == k && static_cast<int>(mu.size()) == k, ErrorKind::kInvalidArgument,
          "theta and mu must have one entry per color");
  require(static_cast<int>(lambda.size()) == graph.edge_count(), ErrorKind::kInvalidArgument,
          "need one rate per edge");
  const int m = graph.edge_count();
  std::vector<double> w(static_cast<size_t>(m));
  double scale = 1.0;
  for (int e = 0; e < m; ++e) {
    require(lambda[static_cast<size_t>(e)] >= 0.0 && std::isfinite(lambda[static_cast<size_t>(e)]),
            ErrorKind::kInvalidArgument, "rates must be finite and >= 0");
    w[static_cast<size_t>(e)] = std::max(0.0, mu[static_cast<size_t>(graph.edge(e).from)]) * lambda[static_cast<size_t>(e)];
    scale += w[static_cast<size_t>(e)];
  }
  for (double v : theta) scale = std::max(scale, std::abs(v));

  // Colors linked by positive-weight edges share one free potential offset.
  std::vector<int> parent(static_cast<size_t>(k));
  std::iota(parent.begin(), parent.end(), 0);
  for (int e = 0; e < m; ++e) {
    if (w[static_cast<size_t>(e)] <= 0.0) continue;
    const int a = find_root(parent, graph.edge(e).from);
    const int b = find_root(parent, graph.edge(e).to);
    if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::vector<double> th(theta.begin(), theta.end());
  std::vector<double> sum(static_cast<size_t>(k), 0.0);
  std::vector<int> size(static_cast<size_t>(k), 0);
  for (int z = 0; z < k; ++z) {
    const int r = find_root(parent, z);
    sum[static_cast<size_t>(r)] += th[static_cast<size_t>(z)];
    ++size[static_cast<size_t>(r)];
  }
  for (int z = 0; z < k; ++z) {
    if (size[static_cast<size_t>(z)] > 0 && std::abs(sum[static_cast<size_t>(z)]) > kMassTol) return kInf;
  }
  for (int z = 0; z < k; ++z) {
    const int r = find_root(parent, z);
    th[static_cast<size_t>(z)] -= sum[static_cast<size_t>(r)] / size[static_cast<size_t>(r)];
  }

  // Free variables: every color except the smallest of its linked set.
  std::vector<int> var(static_cast<size_t>(k), -1);
  size_t n = 0;
  for (int z = 0; z < k; ++z) {
    if (find_root(parent, z) != z) var[static_cast<size_t>(z)] = static_cast<int>(n++);
  }
  if (n == 0) return 0.0;

  std::vector<double> phi(static_cast<size_t>(k), 0.0);
  auto objective = [&](const std::vector<double>& p) {
    double f = 0.0;
    for (int z = 0; z < k; ++z) f += th[static_cast<size_t>(z)] * p[static_cast<size_t>(z)];
    for (int e = 0; e < m; ++e) {
      if (w[static_cast<size_t>(e)] <= 0.0) continue;
      f -= w[static_cast<size_t>(e)] * tau(p[static_cast<size_t>(graph.edge(e).to)] - p[static_cast<size_t>(graph.edge(e).from)]);
    }
    return f;
  };

  std::vector<double> residuals;
  double f = objective(phi);
  for (int iter = 0; iter < kMaxNewton; ++iter) {
    std::vector<double> grad(n, 0.0);
    std::vector<double> hess(n * n, 0.0);  // negated Hessian
    for (int z = 0; z < k; ++z) {
      if (var[static_cast<size_t>(z)] >= 0) grad[static_cast<size_t>(var[static_cast<size_t>(z)])] += th[static_cast<size_t>(z)];
    }
    for (int e = 0; e < m; ++e) {
      const double we = w[static_cast<size_t>(e)];
      if (we <= 0.0) continue;
      const int a = graph.edge(e).from;
      const int b = graph.edge(e).to;
      const double ex = std::exp(phi[static_cast<size_t>(b)] - phi[static_cast<size_t>(a)]);
      const int va = var[static_cast<size_t>(a)];
      const int vb = var[static_cast<size_t>(b)];
      const double g = we * (ex - 1.0);
      const double h = we * ex;
      if (vb >= 0) grad[static_cast<size_t>(vb)] -= g;
      if (va >= 0) grad[static_cast<size_t>(va)] += g;
      if (vb >= 0) hess[static_cast<size_t>(vb) * n + static_cast<size_t>(vb)] += h;
      if (va >= 0) hess[static_cast<size_t>(va) * n + static_cast<size_t>(va)] += h;
      if (va >= 0 && vb >= 0) {
        hess[static_cast<size_t>(va) * n + static_cast<size_t>(vb)] -= h;
        hess[static_cast<size_t>(vb) * n + static_cast<size_t>(va)] -= h;
      }
    }
    double gnorm = 0.0;
    for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
    residuals.push_back(gnorm);
    if (gnorm < 1e-10 * scale) return std::max(0.0, f);

    std::vector<double> step = grad;
    double ridge = 0.0;
    while (true) {
      std::vector<double> mat = hess;
      for (size_t i = 0; i < n; ++i) mat[i * n + i] += ridge;
      step = grad;
      if (cholesky_solve(mat, step, n)) break;
      ridge = ridge == 0.0 ? 1e-12 * scale : ridge * 10.0;
      require(ridge < 1e12 * scale, ErrorKind::kInternal, "variational Hessian is not usable");
    }
    double slope = 0.0;
    for (size_t i = 0; i < n; ++i) slope += grad[i] * step[i];
    double t = 1.0;
    std::vector<double> trial(phi);
    double f_trial = f;
    bool accepted = false;
    // Close to the optimum the objective's roundoff exceeds the Armijo gain;
    // the full Newton step is used there.
    const bool local = gnorm < 1e-6 * scale;
    for (int ls = 0; ls < 60; ++ls) {
      trial = phi;
      for (int z = 0; z < k; ++z) {
        if (var[static_cast<size_t>(z)] >= 0) trial[static_cast<size_t>(z)] += t * step[static_cast<size_t>(var[static_cast<size_t>(z)])];
      }
      f_trial = objective(trial);
      if (std::isfinite(f_trial) && (local || f_trial >= f + 1e-4 * t * slope)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No ascent left at machine precision: the maximum is reached.
      if (gnorm < 1e-7 * scale) return std::max(0.0, f);
      break;
    }
    phi = trial;
    f = f_trial;
    for (double p : phi) {
      if (std::abs(p) > 700.0) return kInf;
    }
  }
  throw NonConvergenceError(
      fmt::format("variational norm: Newton iteration stalled with gradient norm {}", residuals.back()), residuals);
}

DeviationCost variational_cost(const MeanFieldFlow& flow, const ProportionTargets& targets, const RateModel& model) {
  check_flow(flow, targets, model);
  const int pts = flow.points();
  const int k = flow.colors();
  std::vector<std::vector<double>> integrand(static_cast<size_t>(flow.components()),
                                             std::vector<double>(static_cast<size_t>(pts)));
  std::vector<double> theta(static_cast<size_t>(k));
  for (int i = 0; i < pts; ++i) {
    const auto state = flow.state(i);
    const auto rates = mean_field_rates(model, targets, state);
    for (int c = 0; c < flow.components(); ++c) {
      for (int z = 0; z < k; ++z) {
        const auto zu = static_cast<size_t>(z);
        double d;
        if (pts == 2) {
          d = (flow.raw(1, c)[zu] - flow.raw(0, c)[zu]) / (flow.time(1) - flow.time(0));
        } else if (i == 0) {
          d = (-3.0 * flow.raw(0, c)[zu] + 4.0 * flow.raw(1, c)[zu] - flow.raw(2, c)[zu]) / (flow.time(2) - flow.time(0));
        } else if (i == pts - 1) {
          d = (3.0 * flow.raw(i, c)[zu] - 4.0 * flow.raw(i - 1, c)[zu] + flow.raw(i - 2, c)[zu]) /
              (flow.time(i) - flow.time(i - 2));
        } else {
          d = (flow.raw(i + 1, c)[zu] - flow.raw(i - 1, c)[zu]) / (flow.time(i + 1) - flow.time(i - 1));
        }
        theta[zu] = d;
      }
      const auto& graph = component_spec(model, c).color_graph();
      const auto& lambda = rates[static_cast<size_t>(c)];
      const Measure& mu = state[static_cast<size_t>(c)];
      for (int e = 0; e < graph.edge_count(); ++e) {
        const double flux = mu[static_cast<size_t>(graph.edge(e).from)] * lambda[static_cast<size_t>(e)];
        theta[static_cast<size_t>(graph.edge(e).from)] += flux;
        theta[static_cast<size_t>(graph.edge(e).to)] -= flux;
      }
      integrand[static_cast<size_t>(c)][static_cast<size_t>(i)] = variational_norm(graph, theta, mu, lambda);
    }
  }
  return finish_cost(flow, targets, std::move(integrand));
}

MeanFieldFlow integrate_rate_family(const RateModel& model, const RateFamily& family, std::span<const Measure> init) {
  family.validate();
  const int comps = family.components();
  require(static_cast<int>(init.size()) == comps, ErrorKind::kInvalidArgument, "need one initial measure per component");
  require(family.points() >= 1, ErrorKind::kInvalidArgument, "empty rate family");
  for (const auto& m : init) m.require_probability(1e-9);
  const auto& times = family.times();
  const double dt = family.points() > 1 ? times[1] - times[0] : 0.0;
  MeanFieldFlow flow(dt, comps / 2, model.colors());
  std::vector<Measure> y(init.begin(), init.end());
  flow.push_back(times[0], y);

  auto drift = [&](const std::vector<Measure>& s, auto rate_of) {
    std::vector<Measure> out(s.size(), Measure(static_cast<size_t>(model.colors())));
    for (int c = 0; c < comps; ++c) {
      const auto& graph = component_spec(model, c).color_graph();
      for (int e = 0; e < graph.edge_count(); ++e) {
        const auto& edge = graph.edge(e);
        const double flux = s[static_cast<size_t>(c)][static_cast<size_t>(edge.from)] * rate_of(c, e);
        out[static_cast<size_t>(c)][static_cast<size_t>(edge.from)] -= flux;
        out[static_cast<size_t>(c)][static_cast<size_t>(edge.to)] += flux;
      }
    }
    return out;
  };
  auto shifted = [](const std::vector<Measure>& s, double h, const std::vector<Measure>& d) {
    auto out = s;
    for (size_t c = 0; c < s.size(); ++c) {
      for (size_t z = 0; z < s[c].size(); ++z) out[c][z] += h * d[c][z];
    }
    return out;
  };
  for (int n = 0; n + 1 < family.points(); ++n) {
    const double h = times[static_cast<size_t>(n + 1)] - times[static_cast<size_t>(n)];
    auto at0 = [&](int c, int e) { return family.at(c, n, e); };
    auto at1 = [&](int c, int e) { return family.at(c, n + 1, e); };
    auto mid = [&](int c, int e) { return 0.5 * (family.at(c, n, e) + family.at(c, n + 1, e)); };
    const auto k1 = drift(y, at0);
    const auto k2 = drift(shifted(y, h / 2, k1), mid);
    const auto k3 = drift(shifted(y, h / 2, k2), mid);
    const auto k4 = drift(shifted(y, h, k3), at1);
    for (size_t c = 0; c < y.size(); ++c) {
      Measure inc(y[c].size());
      for (size_t z = 0; z < y[c].size(); ++z) inc[z] = h / 6.0 * (k1[c][z] + 2.0 * k2[c][z] + 2.0 * k3[c][z] + k4[c][z]);
      const double shift = inc.mass() / static_cast<double>(inc.size());
      for (size_t z = 0; z < y[c].size(); ++z) y[c][z] += inc[z] - shift;
    }
    flow.push_back(times[static_cast<size_t>(n + 1)], y);
  }
  return flow;
}

double girsanov_log_density(const ColorPath& path, const RateFamily& rates, const ColorGraph& graph, int comp) {
  require(comp >= 0 && comp < rates.components(), ErrorKind::kInvalidArgument, "component out of range");
  require(rates.points() >= 2, ErrorKind::kInvalidArgument, "rate family needs at least two grid points");
  const auto& times = rates.times();
  require(path.horizon <= times.back() * (1.0 + 1e-12), ErrorKind::kInvalidArgument, "path extends beyond the grid");
  auto cell_of = [&](double t) {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return std::clamp(static_cast<int>(it - times.begin()) - 1, 0, rates.points() - 2);
  };
  auto rate = [&](int e, double t) {
    const int i = cell_of(t);
    const double t0 = times[static_cast<size_t>(i)];
    const double t1 = times[static_cast<size_t>(i + 1)];
    const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    return (1.0 - w) * rates.at(comp, i, e) + w * rates.at(comp, i + 1, e);
  };
  auto excess = [&](int x, double t) {
    double s = -static_cast<double>(graph.out_degree(x));
    for (int e : graph.out_edges(x)) s += rate(e, t);
    return s;
  };
  // Exact integral of the piecewise-linear excess rate while in color x.
  auto integrate = [&](int x, double a, double b) {
    double s = 0.0;
    while (a < b) {
      const double end = std::min(b, times[static_cast<size_t>(cell_of(a) + 1)]);
      if (end <= a) break;
      s += 0.5 * (end - a) * (excess(x, a) + excess(x, end));
      a = end;
    }
    return s;
  };

  double h = 0.0;
  int x = path.initial;
  double t = 0.0;
  for (const auto& jump : path.jumps) {
    require(jump.from == x, ErrorKind::kInvalidArgument, "path jumps are inconsistent");
    h -= integrate(x, t, jump.time);
    const double r = rate(graph.index_of({jump.from, jump.to}), jump.time);
    if (r <= 0.0) return -kInf;
    h += std::log(r);
    x = jump.to;
    t = jump.time;
  }
  h -= integrate(x, t, path.horizon);
  return h;
}

double girsanov_log_density(const ColorPath& path, const MeanFieldFlow& flow, const ProportionTargets& targets,
                            const RateModel& model, int block, NodeClass cls) {
  check_flow(flow, targets, model);
  require(block >= 0 && block < targets.block_count(), ErrorKind::kInvalidArgument, "block out of range");
  return girsanov_log_density(path, RateFamily::from_flow(model, targets, flow), model.spec(block, cls).color_graph(),
                              component_index(block, cls));
}

ColorPath sample_reference_path(const ColorGraph& graph, int initial, double horizon, Philox& rng) {
  require(initial >= 0 && initial < graph.colors(), ErrorKind::kInvalidArgument, "initial color out of range");
  ColorPath path;
  path.initial = initial;
  path.horizon = horizon;
  int x = initial;
  double t = 0.0;
  while (graph.out_degree(x) > 0) {
    t += rng.exponential(graph.out_degree(x));
    if (t > horizon) break;
    const int e = graph.out_edges(x)[rng.below(static_cast<std::uint64_t>(graph.out_degree(x)))];
    path.jumps.push_back({t, x, graph.edge(e).to});
    x = graph.edge(e).to;
  }
  return path;
}

double h_functional(std::span<const std::vector<ColorPath>> paths, const MeanFieldFlow& flow,
                    const ProportionTargets& targets, const RateModel& model, std::span<const int> class_sizes) {
  const int comps = 2 * targets.block_count();
  require(static_cast<int>(paths.size()) == comps && static_cast<int>(class_sizes.size()) == comps,
          ErrorKind::kInvalidArgument, "need paths and a class size for every (block, class)");
  double total = 0.0;
  for (int n : class_sizes) {
    require(n >= 0, ErrorKind::kInvalidArgument, "class sizes must be >= 0");
    total += n;
  }
  require(total > 0.0, ErrorKind::kInvalidArgument, "class sizes sum to zero");
  check_flow(flow, targets, model);
  const RateFamily rates = RateFamily::from_flow(model, targets, flow);
  double h = 0.0;
  for (int c = 0; c < comps; ++c) {
    const auto& sample = paths[static_cast<size_t>(c)];
    if (class_sizes[static_cast<size_t>(c)] == 0) continue;
    require(!sample.empty(), ErrorKind::kInvalidArgument, fmt::format("no sample paths for component {}", c));
    const auto& graph = component_spec(model, c).color_graph();
    double avg = 0.0;
    for (const auto& p : sample) avg += girsanov_log_density(p, rates, graph, c);
    h += class_sizes[static_cast<size_t>(c)] / total * avg / static_cast<double>(sample.size());
  }
  return h;
}

}  // namespace blockmf
