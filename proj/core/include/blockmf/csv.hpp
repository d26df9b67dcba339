#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "blockmf/chaos.hpp"
#include "blockmf/ldp.hpp"
#include "blockmf/mean_field.hpp"
#include "blockmf/particle_sim.hpp"

namespace blockmf {

/// Shortest-safe round-trip text: 17 significant digits.
std::string format_double(double v);

/// Header "t,node,from,to"; one row per event.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// Header "t,block,class,color,mass".
void write_empirical_csv(std::ostream& out, std::span<const double> grid, std::span<const EmpiricalVector> values);
void write_flow_csv(std::ostream& out, const MeanFieldFlow& flow);
/// Inverse of write_flow_csv.
MeanFieldFlow read_flow_csv(std::istream& in);

/// Header "N,replicas,mean_dist,stderr".
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);

/// Header "t,block,class,integrand", then a final "S_total,<value>" line.
void write_cost_csv(std::ostream& out, const DeviationCost& cost);

}  // namespace blockmf
