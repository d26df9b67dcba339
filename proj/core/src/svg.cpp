#include "blockmf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "blockmf/error.hpp"

namespace blockmf {
namespace {

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string line_plot_svg(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  auto tx = [&](double v) { return options.log_log ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    require(s.x.size() == s.y.size(), ErrorKind::kInvalidArgument, "series x and y differ in length");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (options.log_log) {
        require(s.x[i] > 0 && s.y[i] > 0, ErrorKind::kInvalidArgument, "log-log plot needs positive data");
      }
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, tx(s.y[i]));
      y1 = std::max(y1, tx(s.y[i]));
    }
  }
  require(std::isfinite(x0) && std::isfinite(y0), ErrorKind::kInvalidArgument, "nothing to plot");
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double v) { return kLeft + (tx(v) - x0) / (x1 - x0) * (kWidth - kLeft - kRight); };
  auto py = [&](double v) { return kHeight - kBottom - (tx(v) - y0) / (y1 - y0) * (kHeight - kTop - kBottom); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  out += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>\n",
                     kWidth / 2, escape(options.title));
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                     kTop, kWidth - kLeft - kRight, kHeight - kTop - kBottom);
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4, fy = y0 + (y1 - y0) * k / 4;
    const double vx = options.log_log ? std::pow(10.0, fx) : fx;
    const double vy = options.log_log ? std::pow(10.0, fy) : fy;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{:.3g}</text>\n",
                       px(vx), kHeight - kBottom + 16, vx);
    out += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{:.3g}</text>\n",
                       kLeft - 6, py(vy) + 4, vy);
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
                     kWidth / 2, kHeight - 12, escape(options.x_label));
  out += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      kHeight / 2, escape(options.y_label));

  if (options.log_log && options.reference_slope && !series.empty() && !series.front().x.empty()) {
    const auto& s = series.front();
    const double xa = s.x.front(), ya = s.y.front(), xb = s.x.back();
    const double yb = ya * std::pow(xb / xa, *options.reference_slope);
    out += fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n",
        px(xa), py(std::clamp(ya, std::pow(10.0, y0), std::pow(10.0, y1))), px(xb),
        py(std::clamp(yb, std::pow(10.0, y0), std::pow(10.0, y1))));
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"gray\">slope {}</text>\n",
                       px(xb) - 60, py(std::clamp(yb, std::pow(10.0, y0), std::pow(10.0, y1))) - 6,
                       *options.reference_slope);
  }

  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::string points;
    for (size_t i = 0; i < s.x.size(); ++i) points += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(s.y[i]));
    out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", points, color);
    if (s.x.size() <= 50) {
      for (size_t i = 0; i < s.x.size(); ++i) {
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(s.x[i]), py(s.y[i]), color);
      }
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{}</text>\n",
                       kLeft + 10, kTop + 16 + 15 * static_cast<double>(k), color, escape(s.name));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace blockmf
