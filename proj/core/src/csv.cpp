#include "blockmf/csv.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "blockmf/error.hpp"

namespace blockmf {

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,node,from,to\n";
  for (const auto& e : trajectory.events) {
    out << format_double(e.time) << ',' << e.node << ',' << e.from << ',' << e.to << '\n';
  }
}

void write_empirical_csv(std::ostream& out, std::span<const double> grid, std::span<const EmpiricalVector> values) {
  require(grid.size() == values.size(), ErrorKind::kInvalidArgument, "grid and values differ in length");
  out << "t,block,class,color,mass\n";
  for (size_t i = 0; i < grid.size(); ++i) {
    const auto& v = values[i];
    for (size_t c = 0; c < v.components.size(); ++c) {
      const auto& m = v.components[c];
      for (size_t z = 0; z < m.size(); ++z) {
        out << format_double(grid[i]) << ',' << c / 2 << ',' << class_tag(static_cast<NodeClass>(c % 2)) << ','
            << z << ',' << format_double(m[z]) << '\n';
      }
    }
  }
}

void write_flow_csv(std::ostream& out, const MeanFieldFlow& flow) {
  out << "t,block,class,color,mass\n";
  for (int i = 0; i < flow.points(); ++i) {
    for (int c = 0; c < flow.components(); ++c) {
      const auto m = flow.raw(i, c);
      for (size_t z = 0; z < m.size(); ++z) {
        out << format_double(flow.time(i)) << ',' << c / 2 << ',' << class_tag(static_cast<NodeClass>(c % 2)) << ','
            << z << ',' << format_double(m[z]) << '\n';
      }
    }
  }
}

MeanFieldFlow read_flow_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "t,block,class,color,mass",
          ErrorKind::kInvalidConfiguration, "flow CSV must start with the header t,block,class,color,mass");
  struct Row {
    double t;
    int block;
    int cls;
    int color;
    double mass;
  };
  std::vector<Row> rows;
  int blocks = 0, colors = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[5];
    for (auto& field : f) {
      require(static_cast<bool>(std::getline(ss, field, ',')), ErrorKind::kInvalidConfiguration,
              fmt::format("flow CSV line {}: expected 5 fields", line_no));
    }
    Row r{};
    try {
      r.t = std::stod(f[0]);
      r.block = std::stoi(f[1]);
      r.color = std::stoi(f[3]);
      r.mass = std::stod(f[4]);
    } catch (const std::exception&) {
      fail(ErrorKind::kInvalidConfiguration, fmt::format("flow CSV line {}: malformed number", line_no));
    }
    require(f[2] == "c" || f[2] == "p", ErrorKind::kInvalidConfiguration,
            fmt::format("flow CSV line {}: unknown class '{}'", line_no, f[2]));
    r.cls = f[2] == "c" ? 0 : 1;
    require(r.block >= 0 && r.color >= 0, ErrorKind::kInvalidConfiguration,
            fmt::format("flow CSV line {}: negative index", line_no));
    blocks = std::max(blocks, r.block + 1);
    colors = std::max(colors, r.color + 1);
    rows.push_back(r);
  }
  require(!rows.empty(), ErrorKind::kInvalidConfiguration, "flow CSV has no rows");
  const size_t per_point = static_cast<size_t>(2 * blocks * colors);
  require(rows.size() % per_point == 0, ErrorKind::kInvalidConfiguration, "flow CSV has an incomplete grid point");
  const size_t points = rows.size() / per_point;
  const double dt = points > 1 ? rows[per_point].t - rows[0].t : 0.0;
  MeanFieldFlow flow(dt, blocks, colors);
  for (size_t i = 0; i < points; ++i) {
    std::vector<Measure> state(static_cast<size_t>(2 * blocks), Measure(static_cast<size_t>(colors)));
    for (size_t k = 0; k < per_point; ++k) {
      const Row& r = rows[i * per_point + k];
      const size_t expect_c = k / static_cast<size_t>(colors);
      require(r.t == rows[i * per_point].t && static_cast<size_t>(2 * r.block + r.cls) == expect_c &&
                  static_cast<size_t>(r.color) == k % static_cast<size_t>(colors),
              ErrorKind::kInvalidConfiguration, "flow CSV rows are not in canonical order");
      state[expect_c][static_cast<size_t>(r.color)] = r.mass;
    }
    if (i > 0) {
      require(rows[i * per_point].t > flow.time(static_cast<int>(i) - 1), ErrorKind::kInvalidConfiguration,
              "flow CSV times must increase");
    }
    flow.push_back(rows[i * per_point].t, state);
  }
  return flow;
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "N,replicas,mean_dist,stderr\n";
  for (const auto& r : report.rows) {
    out << r.total << ',' << r.replicas << ',' << format_double(r.mean_distance) << ',' << format_double(r.std_error)
        << '\n';
  }
}

void write_cost_csv(std::ostream& out, const DeviationCost& cost) {
  out << "t,block,class,integrand\n";
  for (size_t i = 0; i < cost.times.size(); ++i) {
    for (size_t c = 0; c < cost.integrand.size(); ++c) {
      out << format_double(cost.times[i]) << ',' << c / 2 << ',' << class_tag(static_cast<NodeClass>(c % 2)) << ','
          << format_double(cost.integrand[c][i]) << '\n';
    }
  }
  out << "S_total," << format_double(cost.total) << '\n';
}

}  // namespace blockmf
