#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "scenario.hpp"

namespace blockmf::cli {

struct RunOptions {
  std::filesystem::path out;
  int threads = 1;
};

/// Runs one subcommand, writes its artifacts under options.out and returns
/// the one-line summary.
std::string run_command(const std::string& name, const Scenario& scenario, const RunOptions& options);

}  // namespace blockmf::cli
