#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "blockmf/csv.hpp"
#include "blockmf/error.hpp"
#include "blockmf/svg.hpp"
#include "helpers.hpp"

using namespace blockmf;

TEST_CASE("format_double round-trips") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  auto rng = Philox::stream(501, 0);
  for (int i = 0; i < 1000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(40)) - 20.0);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("trajectory CSV layout") {
  Trajectory tr;
  tr.events = {{0.25, 3, 0, 1}, {1.0 / 3.0, 0, 1, 0}};
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  CHECK(out.str() == "t,node,from,to\n0.25,3,0,1\n0.33333333333333331,0,1,0\n");
}

TEST_CASE("flow CSV round trip is exact") {
  const auto model = sis_model({2.0, 1.0}, {1.0, 0.5}, 1.5, {1.0, 0.7});
  const auto targets = ProportionTargets::complete_limit({0.6, 0.4}, {0.5, 0.25});
  const std::vector<Measure> init{Measure{0.8, 0.2}, Measure{0.7, 0.3}, Measure{0.9, 0.1}, Measure{0.6, 0.4}};
  const auto flow = solve_mckean_vlasov(model, targets, init, 0.3, 0.01);
  std::ostringstream out;
  write_flow_csv(out, flow);
  const std::string text = out.str();
  CHECK(text.rfind("t,block,class,color,mass\n0,0,c,0,0.80000000000000004\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  std::istringstream in(text);
  const auto back = read_flow_csv(in);
  REQUIRE(back.points() == flow.points());
  CHECK(back.blocks() == 2);
  CHECK(back.colors() == 2);
  for (int i = 0; i < flow.points(); ++i) {
    CHECK(back.time(i) == flow.time(i));
    for (int c = 0; c < flow.components(); ++c) {
      for (int z = 0; z < 2; ++z) CHECK(back.raw(i, c)[static_cast<size_t>(z)] == flow.raw(i, c)[static_cast<size_t>(z)]);
    }
  }
  std::ostringstream again;
  write_flow_csv(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("flow CSV rejects malformed input") {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return read_flow_csv(in);
  };
  CHECK_THROWS_AS(parse("time,block\n"), Error);
  CHECK_THROWS_AS(parse("t,block,class,color,mass\n0,0,x,0,1\n"), Error);
  CHECK_THROWS_AS(parse("t,block,class,color,mass\n0,0,c,0,1\n0,0,p,0\n"), Error);
  CHECK_THROWS_AS(parse("t,block,class,color,mass\n0,0,p,0,1\n0,0,c,0,1\n"), Error);
  CHECK_THROWS_AS(parse("t,block,class,color,mass\n0,0,c,0,abc\n0,0,p,0,1\n"), Error);
}

TEST_CASE("convergence and cost CSV layout") {
  ConvergenceReport report;
  report.rows.push_back({40, 10, 0.5, 0.125, {}});
  std::ostringstream a;
  write_convergence_csv(a, report);
  CHECK(a.str() == "N,replicas,mean_dist,stderr\n40,10,0.5,0.125\n");

  DeviationCost cost;
  cost.times = {0.0, 0.5};
  cost.integrand = {{1.0, 2.0}, {0.0, 0.25}};
  cost.total = 0.75;
  std::ostringstream b;
  write_cost_csv(b, cost);
  CHECK(b.str() == "t,block,class,integrand\n0,0,c,1\n0,0,p,0\n0.5,0,c,2\n0.5,0,p,0.25\nS_total,0.75\n");
}

TEST_CASE("svg plot") {
  PlotOptions opt;
  opt.title = "a < b & c";
  opt.log_log = true;
  opt.reference_slope = -0.5;
  const auto svg = line_plot_svg({{"mean", {40, 160, 640}, {0.2, 0.1, 0.05}}}, opt);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(line_plot_svg({{"s", {1, 2}, {3, 4}}}, PlotOptions{}) == line_plot_svg({{"s", {1, 2}, {3, 4}}}, PlotOptions{}));
}
