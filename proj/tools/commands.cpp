#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <functional>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "blockmf/chaos.hpp"
#include "blockmf/csv.hpp"
#include "blockmf/error.hpp"
#include "blockmf/ldp.hpp"
#include "blockmf/master_equation.hpp"
#include "blockmf/mean_field.hpp"
#include "blockmf/particle_sim.hpp"
#include "blockmf/svg.hpp"

namespace blockmf::cli {
namespace {

namespace fs = std::filesystem;

// Substream tags so each subcommand draws from its own streams.
constexpr std::uint64_t kSimulateTag = 0x73696d;
constexpr std::uint64_t kOracleTag = 0x6f7263;

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kInvalidConfiguration, fmt::format("cannot write {}", (dir / name).string()));
  return out;
}

void write_text(const fs::path& dir, const std::string& name, const std::string& text) {
  open_output(dir, name) << text;
  spdlog::debug("wrote {}", (dir / name).string());
}

std::string component_name(int comp) { return fmt::format("block {} {}", comp / 2, class_tag(static_cast<NodeClass>(comp % 2))); }

// Mean color of each component over time.
std::vector<PlotSeries> mean_color_series(const std::vector<double>& times,
                                          const std::function<Measure(size_t, int)>& at, int comps) {
  std::vector<PlotSeries> series;
  for (int c = 0; c < comps; ++c) {
    PlotSeries s{component_name(c), times, {}};
    for (size_t i = 0; i < times.size(); ++i) s.y.push_back(at(i, c).mean());
    series.push_back(std::move(s));
  }
  return series;
}

std::string cmd_simulate(const Scenario& s, const RunOptions& o) {
  const auto& graph = s.require_graph("simulate");
  Philox rng = Philox::stream(s.seed, kSimulateTag);
  SystemState state = sample_initial_state(graph, s.init, rng);
  spdlog::info("simulating {} nodes on [0, {}]", graph.node_count(), s.horizon);
  const auto trajectory = simulate(graph, s.model, std::move(state), s.horizon, rng);
  const auto grid = uniform_grid(s.horizon, s.grid);
  const auto empirical = empirical_process(trajectory, graph, grid);

  auto trajectory_csv = open_output(o.out, "trajectory.csv");
  write_trajectory_csv(trajectory_csv, trajectory);
  auto empirical_csv = open_output(o.out, "empirical.csv");
  write_empirical_csv(empirical_csv, grid, empirical);
  PlotOptions plot{"Empirical mean color", "t", "mean color", false, std::nullopt};
  write_text(o.out, "empirical.svg",
             line_plot_svg(mean_color_series(grid, [&](size_t i, int c) { return empirical[i].components[static_cast<size_t>(c)]; },
                                             2 * graph.block_count()),
                           plot));
  return fmt::format("simulate: {} nodes, {} events on [0, {}]", graph.node_count(), trajectory.events.size(),
                     s.horizon);
}

void write_flow_artifacts(const MeanFieldFlow& flow, const RunOptions& o, const std::string& stem,
                          const std::string& title) {
  auto flow_csv = open_output(o.out, stem + ".csv");
  write_flow_csv(flow_csv, flow);
  PlotOptions plot{title, "t", "mean color", false, std::nullopt};
  write_text(o.out, stem + ".svg",
             line_plot_svg(mean_color_series(flow.times(), [&](size_t i, int c) { return flow.measure(static_cast<int>(i), c); },
                                             flow.components()),
                           plot));
}

std::string final_means(const MeanFieldFlow& flow) {
  std::string out;
  for (int c = 0; c < flow.components(); ++c) {
    out += fmt::format("{}{:.6g}", c ? ", " : "", flow.measure(flow.points() - 1, c).mean());
  }
  return out;
}

std::string cmd_meanfield(const Scenario& s, const RunOptions& o) {
  const auto targets = s.limit_targets();
  const auto flow = solve_mckean_vlasov(s.model, targets, s.init, s.horizon, s.step());
  write_flow_artifacts(flow, o, "flow", "Mean-field flow");
  return fmt::format("meanfield: {} steps of {:.6g}; mean colors at T: {}", flow.points() - 1, flow.dt(),
                     final_means(flow));
}

std::string cmd_picard(const Scenario& s, const RunOptions& o) {
  const auto targets = s.limit_targets();
  const double dt = s.step();
  const auto result =
      picard_iterate(s.model, targets, s.init, s.horizon, dt, s.picard.tol, s.picard.max_iter);
  const auto rk = solve_mckean_vlasov(s.model, targets, s.init, s.horizon, dt);
  write_flow_artifacts(result.flow, o, "picard_flow", "Picard fixed point");
  auto csv = open_output(o.out, "residuals.csv");
  csv << "iteration,residual\n";
  PlotSeries series{"residual", {}, {}};
  for (size_t k = 0; k < result.residuals.size(); ++k) {
    csv << k + 1 << ',' << format_double(result.residuals[k]) << '\n';
    if (result.residuals[k] > 0.0) {
      series.x.push_back(static_cast<double>(k + 1));
      series.y.push_back(std::log10(result.residuals[k]));
    }
  }
  if (!series.x.empty()) {
    write_text(o.out, "residuals.svg",
               line_plot_svg({series}, PlotOptions{"Picard residuals", "iteration", "log10 residual", false, std::nullopt}));
  }
  return fmt::format("picard: converged in {} iterations, final residual {:.3g}, distance to RK4 flow {:.3g}",
                     result.residuals.size(), result.residuals.back(), flow_distance(result.flow, rk));
}

ProportionTargets family_targets(const Scenario& s, const FamilySpec& family, int largest) {
  if (s.targets) return *s.targets;
  if (!family.fraction) return ProportionTargets::complete_limit(family.alpha, family.p_c);
  return ProportionTargets::from_graph(family.build(largest));
}

std::vector<int> totals_of(const Scenario& s, const char* command) {
  require(!s.n_list.empty(), ErrorKind::kInvalidConfiguration, fmt::format("`{}` needs \"N_list\"", command));
  return s.n_list;
}

std::string cmd_chaos(const Scenario& s, const RunOptions& o) {
  const auto family = s.graph_family();
  LlnSettings settings;
  settings.horizon = s.horizon;
  settings.grid_points = s.grid;
  settings.totals = totals_of(s, "chaos");
  settings.replicas = s.replicas.value_or(100);
  settings.seed = s.seed;
  settings.threads = o.threads;
  settings.dt = s.step();
  const auto targets = family_targets(s, family, settings.totals.back());
  spdlog::info("chaos: {} replicas for each of {} system sizes", settings.replicas, settings.totals.size());
  const auto report = lln_experiment([&](int n) { return family.build(n); }, s.model, targets, s.init, settings);

  auto convergence_csv = open_output(o.out, "convergence.csv");
  write_convergence_csv(convergence_csv, report);
  PlotSeries series{"mean sup-grid d_BL", {}, {}};
  for (const auto& r : report.rows) {
    series.x.push_back(r.total);
    series.y.push_back(r.mean_distance);
  }
  std::string summary = "chaos:";
  for (const auto& r : report.rows) {
    summary += fmt::format(" e({}) = {:.4g} +- {:.2g};", r.total, r.mean_distance, r.std_error);
  }
  if (std::all_of(series.y.begin(), series.y.end(), [](double v) { return v > 0.0; })) {
    write_text(o.out, "convergence.svg",
               line_plot_svg({series}, PlotOptions{"Distance to the mean-field limit", "N", "mean distance", true, -0.5}));
  }
  summary.pop_back();
  return summary;
}

std::string cmd_multichaos(const Scenario& s, const RunOptions& o) {
  std::vector<std::pair<int, BlockGraph>> graphs;
  if (s.n_list.empty()) {
    const auto& g = s.require_graph("multichaos");
    graphs.emplace_back(g.node_count(), g);
  } else {
    const auto family = s.graph_family();
    for (int n : s.n_list) graphs.emplace_back(n, family.build(n));
  }
  MultichaosSettings settings;
  settings.horizon = s.horizon;
  settings.replicas = s.replicas.value_or(2000);
  settings.seed = s.seed;
  settings.threads = o.threads;

  auto table = open_output(o.out, "multichaos.csv");
  auto joint = open_output(o.out, "joint.csv");
  table << "N,nodes,tv,tv_se\n";
  joint << "N,cell,joint,product\n";
  PlotSeries series{"TV(joint, product)", {}, {}};
  std::string summary = "multichaos:";
  for (const auto& [n, graph] : graphs) {
    std::vector<int> nodes;
    for (const auto& t : s.tagged) {
      require(t.index < graph.class_size(t.block, t.cls), ErrorKind::kInvalidConfiguration,
              fmt::format("tagged node index {} is out of range for N = {}", t.index, n));
      nodes.push_back(graph.first_node(t.block, t.cls) + t.index);
    }
    const auto r = multichaos_test(graph, s.model, s.init, nodes, settings);
    std::string ids;
    for (int v : nodes) ids += fmt::format("{}{}", ids.empty() ? "" : " ", v);
    table << n << ',' << ids << ',' << format_double(r.tv) << ',' << format_double(r.tv_se) << '\n';
    for (size_t cell = 0; cell < r.joint.size(); ++cell) {
      joint << n << ',' << cell << ',' << format_double(r.joint[cell]) << ',' << format_double(r.product[cell]) << '\n';
    }
    series.x.push_back(n);
    series.y.push_back(r.tv);
    summary += fmt::format(" TV(N={}) = {:.4f} +- {:.4f};", n, r.tv, r.tv_se);
  }
  write_text(o.out, "multichaos.svg",
             line_plot_svg({series}, PlotOptions{"Distance from independence", "N", "total variation", false, std::nullopt}));
  summary.pop_back();
  return summary;
}

std::string cmd_ldp_cost(const Scenario& s, const RunOptions& o) {
  const auto targets = s.limit_targets();
  MeanFieldFlow flow;
  if (s.flow) {
    std::ifstream in(*s.flow, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::kInvalidConfiguration, fmt::format("cannot open flow {}", s.flow->string()));
    flow = read_flow_csv(in);
    require(flow.blocks() == targets.block_count() && flow.colors() == s.model.colors(),
            ErrorKind::kInvalidConfiguration, "the flow file does not match the scenario's blocks and colors");
  } else {
    flow = solve_mckean_vlasov(s.model, targets, s.init, s.horizon, s.step());
  }
  const auto cost = variational_cost(flow, targets, s.model);
  auto cost_csv = open_output(o.out, "cost.csv");
  write_cost_csv(cost_csv, cost);
  std::vector<PlotSeries> series;
  for (size_t c = 0; c < cost.integrand.size(); ++c) {
    series.push_back({component_name(static_cast<int>(c)), cost.times, cost.integrand[c]});
  }
  write_text(o.out, "cost.svg", line_plot_svg(series, PlotOptions{"Rate-function integrand", "t", "integrand", false, std::nullopt}));
  return fmt::format("ldp-cost: S = {:.6g} over [0, {}]", cost.total, flow.horizon());
}

std::string cmd_oracle_check(const Scenario& s, const RunOptions& o) {
  const auto& graph = s.require_graph("oracle-check");
  const int n = graph.node_count();
  const int k = s.model.colors();
  const auto exact = master_equation_oracle(graph, s.model, product_distribution(graph, s.init), s.horizon, s.oracle_tol);
  const int replicas = s.replicas.value_or(20000);
  spdlog::info("oracle-check: {} Monte Carlo replicas", replicas);
  const auto finals = run_replicas<std::vector<int>>(static_cast<size_t>(replicas), o.threads, [&](size_t i) {
    Philox rng = Philox::stream(s.seed, kOracleTag, i);
    SystemState state = sample_initial_state(graph, s.init, rng);
    Simulator sim(graph, s.model, std::move(state), rng);
    sim.advance_to(s.horizon);
    return sim.state().node_colors();
  });
  auto csv = open_output(o.out, "oracle.csv");
  csv << "node,color,oracle,mc,stderr\n";
  double worst = 0.0, worst_ratio = 0.0;
  for (int node = 0; node < n; ++node) {
    const auto p = node_marginal(exact, node, n, k);
    std::vector<double> counts(static_cast<size_t>(k), 0.0);
    for (const auto& f : finals) counts[static_cast<size_t>(f[static_cast<size_t>(node)])] += 1.0;
    for (int z = 0; z < k; ++z) {
      const double mc = counts[static_cast<size_t>(z)] / replicas;
      const double se = std::sqrt(p[static_cast<size_t>(z)] * (1.0 - p[static_cast<size_t>(z)]) / replicas);
      const double diff = std::abs(mc - p[static_cast<size_t>(z)]);
      worst = std::max(worst, diff);
      if (se > 0.0) worst_ratio = std::max(worst_ratio, diff / se);
      csv << node << ',' << z << ',' << format_double(p[static_cast<size_t>(z)]) << ',' << format_double(mc) << ','
          << format_double(se) << '\n';
    }
  }
  return fmt::format("oracle-check: max |MC - oracle| = {:.3g} ({:.2f} standard errors) over {} nodes, {} replicas",
                     worst, worst_ratio, n, replicas);
}

std::string cmd_validate(const Scenario& s, const RunOptions&) {
  std::string out = fmt::format("validate: {} OK; {} block(s), {} colors", s.source.string(), s.blocks(), s.model.colors());
  if (s.graph) {
    out += fmt::format(", {} nodes", s.graph->node_count());
    if (s.targets) out += fmt::format(", regularity gap {:.3g}", check_regularity(*s.graph, *s.targets).max());
  }
  return out;
}

}  // namespace

std::string run_command(const std::string& name, const Scenario& scenario, const RunOptions& options) {
  using Handler = std::string (*)(const Scenario&, const RunOptions&);
  static const std::map<std::string, Handler> handlers{
      {"simulate", cmd_simulate}, {"meanfield", cmd_meanfield},   {"picard", cmd_picard},
      {"chaos", cmd_chaos},       {"multichaos", cmd_multichaos}, {"ldp-cost", cmd_ldp_cost},
      {"oracle-check", cmd_oracle_check}, {"validate", cmd_validate}};
  const auto it = handlers.find(name);
  require(it != handlers.end(), ErrorKind::kInvalidArgument, fmt::format("unknown subcommand {}", name));
  return it->second(scenario, options);
}

}  // namespace blockmf::cli
