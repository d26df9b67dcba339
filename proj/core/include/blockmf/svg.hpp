#pragma once

#include <optional>
#include <string>
#include <vector>

namespace blockmf {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_log = false;
  /// Dashed reference line of this slope through the first point of the
  /// first series (log-log plots only).
  std::optional<double> reference_slope;
};

/// Static SVG line plot with markers.
std::string line_plot_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

}  // namespace blockmf
