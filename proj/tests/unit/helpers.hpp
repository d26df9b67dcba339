#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "blockmf/rate_model.hpp"
#include "blockmf/rng.hpp"

namespace blockmf::testing {

/// Two colors, both directions, constant rates.
inline RateSpec constant_two_state(double up, double down) {
  ColorGraph g(2, {{0, 1}, {1, 0}});
  return RateSpec(g, {{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}, {up, down});
}

/// Random measure-affine spec with every rate in [0, gamma_bar].
inline RateSpec random_spec(Philox& rng, int colors, double gamma_bar, double edge_prob = 0.6) {
  std::vector<ColorEdge> edges;
  for (int z = 0; z < colors; ++z) {
    for (int zp = 0; zp < colors; ++zp) {
      if (z != zp && rng.uniform() < edge_prob) edges.push_back({z, zp});
    }
  }
  if (edges.empty()) edges.push_back({0, 1});
  std::vector<std::vector<double>> gc(edges.size()), gp(edges.size());
  for (size_t e = 0; e < edges.size(); ++e) {
    for (int x = 0; x < colors; ++x) {
      gc[e].push_back(gamma_bar * rng.uniform());
      gp[e].push_back(gamma_bar * rng.uniform());
    }
  }
  return RateSpec(ColorGraph(colors, edges), gc, gp);
}

/// Fresh random tables on an existing color graph.
inline RateSpec random_tables(Philox& rng, const ColorGraph& graph, double gamma_bar) {
  std::vector<std::vector<double>> gc(static_cast<size_t>(graph.edge_count())), gp(gc.size());
  for (size_t e = 0; e < gc.size(); ++e) {
    for (int x = 0; x < graph.colors(); ++x) {
      gc[e].push_back(gamma_bar * rng.uniform());
      gp[e].push_back(gamma_bar * rng.uniform());
    }
  }
  return RateSpec(graph, gc, gp);
}

inline Measure random_measure(Philox& rng, int colors) {
  Measure m(static_cast<size_t>(colors));
  double s = 0.0;
  for (int z = 0; z < colors; ++z) {
    m[static_cast<size_t>(z)] = -std::log(rng.uniform());
    s += m[static_cast<size_t>(z)];
  }
  for (int z = 0; z < colors; ++z) m[static_cast<size_t>(z)] /= s;
  return m;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Standard error of the mean.
inline double std_error(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace blockmf::testing
