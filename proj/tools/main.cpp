#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "blockmf/chaos.hpp"
#include "blockmf/error.hpp"
#include "commands.hpp"
#include "scenario.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("blockmf");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("BLOCKMF_LOG");
  const std::string level = env ? env : "error";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::err);
    spdlog::error("BLOCKMF_LOG must be error, info or debug (got \"{}\"); using error", level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Block-structured mean-field interacting particle systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  int threads = blockmf::default_threads();

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Simulate the N-particle system once and write its trajectory"},
      {"meanfield", "Solve the McKean-Vlasov limit equations"},
      {"picard", "Solve the limit equations by fixed-point iteration"},
      {"chaos", "Distance between empirical measures and the limit over N_list"},
      {"multichaos", "Dependence between tagged nodes over N_list"},
      {"ldp-cost", "Rate-function cost of a flow (default: the limit flow)"},
      {"oracle-check", "Compare Monte Carlo marginals with the exact master equation"},
      {"validate", "Parse and validate a scenario"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides the scenario)");
    sub->add_option("--seed", seed, "Master seed (overrides the scenario)");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--grid", grid, "Number of grid points (overrides the scenario)")->check(CLI::Range(2, 1 << 24));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    auto scenario = blockmf::cli::load_scenario(scenario_path);
    if (seed) scenario.seed = *seed;
    if (grid) scenario.grid = *grid;
    blockmf::cli::RunOptions options;
    options.out = out_dir.empty() ? scenario.output : std::filesystem::path(out_dir);
    options.threads = threads;
    spdlog::info("{}: scenario {}, seed {}, {} thread(s)", command, scenario_path, scenario.seed, threads);
    std::cout << blockmf::cli::run_command(command, scenario, options) << '\n';
    return 0;
  } catch (const blockmf::NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    std::string history;
    for (double r : e.residuals()) history += fmt::format(" {:.3g}", r);
    spdlog::info("residual history:{}", history);
    return kExitNumerical;
  } catch (const blockmf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_validation() ? kExitValidation : kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
