// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number, e.g. `blockmf_acceptance 3 5`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "blockmf/block_graph.hpp"
#include "blockmf/chaos.hpp"
#include "blockmf/error.hpp"
#include "blockmf/ldp.hpp"
#include "blockmf/master_equation.hpp"
#include "blockmf/mean_field.hpp"
#include "blockmf/particle_sim.hpp"
#include "blockmf/rate_model.hpp"
#include "blockmf/rng.hpp"

namespace fs = std::filesystem;
using namespace blockmf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;  // seconds; 0 = none
  std::function<Outcome()> run;
};

Measure random_measure(Philox& rng, int k) {
  Measure m(static_cast<size_t>(k));
  double s = 0.0;
  for (int z = 0; z < k; ++z) s += m[static_cast<size_t>(z)] = -std::log(rng.uniform());
  for (int z = 0; z < k; ++z) m[static_cast<size_t>(z)] /= s;
  return m;
}

std::vector<double> random_simplex(Philox& rng, int n) {
  const Measure m = random_measure(rng, n);
  return m.vec();
}

struct Instance {
  RateModel model;
  ProportionTargets targets;
  std::vector<Measure> init;
  int colors = 0;
  int blocks = 0;
  double gamma_bar = 0.0;
};

// Random measure-affine model with K <= 5, r <= 3, every rate at most 5.
Instance random_instance(std::uint64_t seed, int index) {
  auto rng = Philox::stream(seed, 0x696e7374ULL, static_cast<std::uint64_t>(index));
  Instance in;
  in.colors = 2 + static_cast<int>(rng.below(4));
  in.blocks = 1 + static_cast<int>(rng.below(3));
  in.gamma_bar = 1.0 + 4.0 * rng.uniform();
  const int k = in.colors;
  std::vector<ColorEdge> edges;
  for (int z = 0; z < k; ++z) {
    for (int w = 0; w < k; ++w) {
      if (z != w && rng.uniform() < 0.6) edges.push_back({z, w});
    }
  }
  if (edges.empty()) edges.push_back({0, 1});
  const ColorGraph graph(k, edges);
  std::vector<RateSpec> specs;
  for (int c = 0; c < 2 * in.blocks; ++c) {
    std::vector<std::vector<double>> gc(edges.size()), gp(edges.size());
    for (size_t e = 0; e < edges.size(); ++e) {
      for (int x = 0; x < k; ++x) {
        gc[e].push_back(in.gamma_bar * rng.uniform());
        gp[e].push_back(in.gamma_bar * rng.uniform());
      }
    }
    specs.emplace_back(graph, gc, gp);
  }
  in.model = RateModel::per_class(std::move(specs));
  const int r = in.blocks;
  in.targets.alpha = random_simplex(rng, r);
  for (int j = 0; j < r; ++j) {
    const double pc = 0.1 + 0.8 * rng.uniform();
    in.targets.p_c.push_back(pc);
    in.targets.p_p.push_back(1.0 - pc);
    const auto row = random_simplex(rng, r + 1);
    in.targets.alpha_c.push_back(row[0]);
    in.targets.q.emplace_back(row.begin() + 1, row.end());
  }
  in.targets.validate();
  for (int c = 0; c < 2 * r; ++c) in.init.push_back(random_measure(rng, k));
  return in;
}

constexpr std::uint64_t kSeed = 20240601;
constexpr int kInstances = 50;

// SIS on two blocks used by the chaos, multichaos and zero-cost criteria.
RateModel sis_two_blocks() { return sis_model({3.0, 2.0}, {2.0, 2.5}, 3.0, {1.0, 1.2}); }
ProportionTargets sis_targets() { return ProportionTargets::complete_limit({0.5, 0.5}, {0.5, 0.5}); }
std::vector<Measure> sis_init() {
  return {Measure{0.9, 0.1}, Measure{0.8, 0.2}, Measure{0.95, 0.05}, Measure{0.85, 0.15}};
}
BlockGraph sis_graph(int total) { return complete_graph_for_total(total, {0.5, 0.5}, {0.5, 0.5}); }

Outcome oracle_equivalence() {
  const auto graph = build_complete_peripheral({{2, 1}});
  const auto model = sis_model({2.0}, {1.5}, 1.0, {1.0});
  const std::vector<Measure> init{Measure{0.6, 0.4}, Measure{0.3, 0.7}};
  const double horizon = 2.0;
  const auto exact = master_equation_oracle(graph, model, product_distribution(graph, init), horizon, 1e-10);
  const int replicas = 20000;
  const auto finals = run_replicas<std::vector<int>>(replicas, default_threads(), [&](size_t i) {
    Philox rng = Philox::stream(kSeed, 1, i);
    SystemState s = sample_initial_state(graph, init, rng);
    Simulator sim(graph, model, std::move(s), rng);
    sim.advance_to(horizon);
    return sim.state().node_colors();
  });
  const int n = graph.node_count();
  bool ok = true;
  std::string detail;
  for (int node = 0; node < n; ++node) {
    const double p = node_marginal(exact, node, n, 2)[1];
    double hits = 0.0;
    for (const auto& f : finals) hits += f[static_cast<size_t>(node)] == 1;
    const double mc = hits / replicas;
    const double se = std::sqrt(p * (1.0 - p) / replicas);
    const double z = std::abs(mc - p) / se;
    ok = ok && z <= 3.0;
    detail += fmt::format("{}node {}: oracle {:.5f} mc {:.5f} ({:.2f} SE)", node ? "; " : "", node, p, mc, z);
  }
  return {ok, detail};
}

Outcome mean_field_conservation() {
  double worst_mass = 0.0, min_entry = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    const auto in = random_instance(kSeed, i);
    const auto flow = solve_mckean_vlasov(in.model, in.targets, in.init, 5.0, 0.002);
    for (int p = 0; p < flow.points(); ++p) {
      for (int c = 0; c < flow.components(); ++c) {
        double mass = 0.0;
        for (double v : flow.raw(p, c)) {
          mass += v;
          min_entry = std::min(min_entry, v);
        }
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
      }
    }
  }
  return {worst_mass <= 1e-9 && min_entry >= -1e-12,
          fmt::format("{} instances: max |mass - 1| = {:.3g}, min entry = {:.3g}", kInstances, worst_mass, min_entry)};
}

Outcome picard_agreement() {
  int converged = 0, monotone = 0, max_iter = 0;
  double worst = 0.0;
  std::string failures;
  for (int i = 0; i < kInstances; ++i) {
    const auto in = random_instance(kSeed, i);
    const auto rk = solve_mckean_vlasov(in.model, in.targets, in.init, 5.0, 0.002);
    try {
      const auto res = picard_iterate(in.model, in.targets, in.init, 5.0, 0.002, 1e-8, 50);
      ++converged;
      max_iter = std::max(max_iter, static_cast<int>(res.residuals.size()));
      worst = std::max(worst, flow_distance(res.flow, rk));
      bool mono = true;
      for (size_t k = 2; k < res.residuals.size(); ++k) mono = mono && res.residuals[k] < res.residuals[k - 1];
      monotone += mono;
      if (!mono) failures += fmt::format(" [instance {} not monotone]", i);
    } catch (const NonConvergenceError& e) {
      failures += fmt::format(" [instance {} (K={}, r={}, gamma_bar={:.2f}): last residual {:.3g}]", i, in.colors,
                              in.blocks, in.gamma_bar, e.residuals().empty() ? NAN : e.residuals().back());
    }
  }
  return {converged == kInstances && monotone == kInstances && worst <= 1e-6,
          fmt::format("converged {}/{}, monotone {}/{}, max iterations {}, sup distance to RK {:.3g}{}", converged,
                      kInstances, monotone, kInstances, max_iter, worst, failures)};
}

Outcome chaos_scaling() {
  LlnSettings s;
  s.horizon = 3.0;
  s.grid_points = 31;
  s.totals = {40, 160, 640};
  s.replicas = 100;
  s.seed = kSeed;
  s.threads = default_threads();
  const auto report = lln_experiment(sis_graph, sis_two_blocks(), sis_targets(), sis_init(), s);
  bool decreasing = true;
  std::string detail;
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    if (i > 0) decreasing = decreasing && r.mean_distance < report.rows[i - 1].mean_distance;
    detail += fmt::format("e({}) = {:.4f} +- {:.4f}; ", r.total, r.mean_distance, r.std_error);
  }
  const double ratio = report.rows.front().mean_distance / report.rows.back().mean_distance;
  return {decreasing && ratio >= 2.0, detail + fmt::format("e(40)/e(640) = {:.2f}", ratio)};
}

Outcome multichaos() {
  const auto model = sis_two_blocks();
  MultichaosSettings s;
  s.horizon = 3.0;
  s.replicas = 2000;
  s.seed = kSeed;
  s.threads = default_threads();
  std::vector<double> tv;
  std::string detail;
  for (int total : {40, 160, 640}) {
    const auto graph = sis_graph(total);
    const std::vector<int> tagged{graph.first_node(0, NodeClass::kCentral), graph.first_node(1, NodeClass::kPeripheral)};
    const auto r = multichaos_test(graph, model, sis_init(), tagged, s);
    tv.push_back(r.tv);
    detail += fmt::format("TV(N={}) = {:.4f} +- {:.4f}; ", total, r.tv, r.tv_se);
  }
  const bool decreasing = tv[0] > tv[1] && tv[1] > tv[2];
  return {decreasing && tv.back() < 0.1, detail.substr(0, detail.size() - 2)};
}

Outcome zero_cost() {
  const auto model = sis_two_blocks();
  const auto targets = sis_targets();
  const auto flow = solve_mckean_vlasov(model, targets, sis_init(), 3.0, default_dt(model));
  const auto variational = variational_cost(flow, targets, model);
  const auto legendre = legendre_cost(flow, targets, model, RateFamily::from_flow(model, targets, flow));
  return {variational.total <= 1e-5 && legendre.total == 0.0,
          fmt::format("variational S = {:.3g}, Legendre S with l = lambda = {}", variational.total, legendre.total)};
}

Outcome duality() {
  auto rng = Philox::stream(kSeed, 7);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));
    std::vector<ColorEdge> edges;
    for (int z = 0; z < k; ++z) {
      for (int w = 0; w < k; ++w) {
        if (z != w && (rng.uniform() < 0.7 || (w == (z + 1) % k))) edges.push_back({z, w});
      }
    }
    const ColorGraph g(k, edges);
    const Measure mu = random_measure(rng, k);
    std::vector<double> phi(static_cast<size_t>(k));
    for (auto& p : phi) p = -1.5 + 3.0 * rng.uniform();
    std::vector<double> lambda, l;
    std::vector<double> theta(static_cast<size_t>(k), 0.0);
    for (const auto& e : edges) {
      const double lam = 0.1 + 4.9 * rng.uniform();
      const double le = lam * std::exp(phi[static_cast<size_t>(e.to)] - phi[static_cast<size_t>(e.from)]);
      lambda.push_back(lam);
      l.push_back(le);
      const double d = mu[static_cast<size_t>(e.from)] * (le - lam);
      theta[static_cast<size_t>(e.from)] -= d;
      theta[static_cast<size_t>(e.to)] += d;
    }
    const double legendre = legendre_integrand(g, mu, lambda, l);
    const double norm = variational_norm(g, theta, mu, lambda);
    worst = std::max(worst, std::abs(norm - legendre) / (1.0 + legendre));
  }
  return {worst <= 1e-4, fmt::format("200 instances, max relative discrepancy {:.3g}", worst)};
}

Outcome girsanov() {
  const auto model = sis_model({2.0}, {1.5}, 1.0, {1.0});
  const auto targets = ProportionTargets::complete_limit({1.0}, {0.5});
  const std::vector<Measure> init{Measure{0.7, 0.3}, Measure{0.6, 0.4}};
  const auto flow = solve_mckean_vlasov(model, targets, init, 2.0, 0.01);
  const auto family = RateFamily::from_flow(model, targets, flow);
  const auto& g = model.color_graph();
  auto rng = Philox::stream(kSeed, 8);
  const int paths = 10000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < paths; ++i) {
    const auto path = sample_reference_path(g, static_cast<int>(rng.below(2)), 2.0, rng);
    const double w = std::exp(girsanov_log_density(path, family, g, component_index(0, NodeClass::kCentral)));
    s += w;
    ss += w * w;
  }
  const double mean = s / paths;
  const double se = std::sqrt((ss / paths - mean * mean) / (paths - 1));
  const double z = std::abs(mean - 1.0) / se;
  return {z <= 3.0, fmt::format("E[exp h] = {:.4f} +- {:.4f} ({:.2f} SE from 1)", mean, se, z)};
}

Outcome tau_suite() {
  auto rng = Philox::stream(kSeed, 9);
  double worst_gap = 0.0, worst_eq = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = -10.0 + 20.0 * rng.uniform();
    const double v = -1.0 + 30.0 * rng.uniform();
    // Negative gap means a violation of tau(u) + tau*(v) >= uv.
    worst_gap = std::min(worst_gap, tau(u) + tau_star(v) - u * v);
    const double vs = std::expm1(u);
    worst_eq = std::max(worst_eq, std::abs(tau(u) + tau_star(vs) - u * vs) / (1.0 + std::abs(u * vs)));
  }
  const bool exact = tau_star(-1.0) == 1.0;
  return {worst_gap >= -1e-12 && worst_eq <= 1e-8 && exact,
          fmt::format("min(tau + tau* - uv) = {:.3g}, max equality error {:.3g}, tau*(-1) = {}", worst_gap, worst_eq,
                      tau_star(-1.0))};
}

#ifdef BLOCKMF_CLI_PATH
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / fmt::format("blockmf_acceptance_{}", ::getpid());
  fs::create_directories(dir);
  const fs::path scenario = dir / "scenario.json";
  std::ofstream(scenario) << R"({
  "schema": "blockmf/1",
  "seed": 12345,
  "graph": {"blocks": [{"central": 20, "peripheral": 20}, {"central": 20, "peripheral": 20}], "peripheral": "complete"},
  "rates": {"model": "sis", "gamma": [3.0, 2.0], "nu": [2.0, 2.5], "eta": 3.0, "zeta": [1.0, 1.2]},
  "init": [[0.9, 0.1], [0.8, 0.2], [0.95, 0.05], [0.85, 0.15]],
  "horizon": 2.0,
  "grid": 21,
  "replicas": 24,
  "N_list": [40, 80, 160]
}
)";
  std::string detail;
  bool ok = true;
  for (const char* cmd : {"simulate", "chaos"}) {
    std::vector<fs::path> outs;
    for (int threads : {1, 8}) {
      const fs::path out = dir / fmt::format("{}_{}", cmd, threads);
      const std::string line = fmt::format("\"{}\" {} --scenario \"{}\" --out \"{}\" --threads {} > \"{}\" 2>&1",
                                           BLOCKMF_CLI_PATH, cmd, scenario.string(), out.string(), threads,
                                           (dir / "log.txt").string());
      const int rc = std::system(line.c_str());
      if (rc != 0) {
        return {false, fmt::format("`{}` exited with {}: {}", cmd, rc, slurp(dir / "log.txt"))};
      }
      outs.push_back(out);
    }
    int files = 0;
    for (const auto& entry : fs::directory_iterator(outs[0])) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      const bool same = slurp(entry.path()) == slurp(outs[1] / entry.path().filename());
      ok = ok && same;
      if (!same) detail += fmt::format("{}/{} differs; ", cmd, entry.path().filename().string());
    }
    ok = ok && files > 0;
    detail += fmt::format("{}: {} CSV file(s) compared; ", cmd, files);
  }
  fs::remove_all(dir);
  return {ok, detail.substr(0, detail.size() - 2)};
}
#endif

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> criteria{
      {1, "oracle equivalence", 60, oracle_equivalence},
      {2, "mean-field conservation", 60, mean_field_conservation},
      {3, "Picard agreement", 0, picard_agreement},
      {4, "chaos scaling", 300, chaos_scaling},
      {5, "multi-chaos", 300, multichaos},
      {6, "zero cost", 10, zero_cost},
      {7, "Legendre-variational duality", 30, duality},
      {8, "Girsanov normalization", 30, girsanov},
      {9, "tau / tau* suite", 0, tau_suite},
#ifdef BLOCKMF_CLI_PATH
      {10, "determinism across thread counts", 0, determinism},
#else
      {10, "determinism across thread counts", 0, [] { return Outcome{false, "CLI not built"}; }},
#endif
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      out.pass = false;
      out.detail += fmt::format("; exceeded the {:.0f} s limit", c.time_limit);
    }
    failed += !out.pass;
    fmt::print("{} {:>2}. {}: {} ({:.1f} s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail, secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
