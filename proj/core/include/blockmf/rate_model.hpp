#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blockmf/block_graph.hpp"
#include "blockmf/measure.hpp"

namespace blockmf {

struct ColorEdge {
  int from = 0;
  int to = 0;
  friend bool operator==(const ColorEdge&, const ColorEdge&) = default;
};

/// Admissible jumps (Z, E) on colors 0..K-1.
class ColorGraph {
 public:
  ColorGraph() = default;
  ColorGraph(int colors, std::vector<ColorEdge> edges);

  int colors() const { return colors_; }
  const std::vector<ColorEdge>& edges() const { return edges_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const ColorEdge& edge(int index) const { return edges_[static_cast<size_t>(index)]; }

  std::optional<int> find(int from, int to) const;
  /// Throws kUnknownEdge when (from, to) is not admissible.
  int index_of(ColorEdge e) const;
  /// Indices of edges leaving `color`.
  std::span<const int> out_edges(int color) const { return out_[static_cast<size_t>(color)]; }
  int out_degree(int color) const { return static_cast<int>(out_[static_cast<size_t>(color)].size()); }

  friend bool operator==(const ColorGraph& a, const ColorGraph& b) {
    return a.colors_ == b.colors_ && a.edges_ == b.edges_;
  }

 private:
  int colors_ = 0;
  std::vector<ColorEdge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<int> lookup_;  // from * K + to -> edge index or -1
};

/// Base functions gamma^c, gamma^p per edge plus an additive state-only term
/// beta per edge. A rate evaluates to max(0, affine(measures) + beta); the
/// clip is only active for specs with negative beta (queue arrivals).
class RateSpec {
 public:
  RateSpec() = default;
  RateSpec(ColorGraph graph, std::vector<std::vector<double>> gamma_c,
           std::vector<std::vector<double>> gamma_p, std::vector<double> beta = {});

  const ColorGraph& color_graph() const { return graph_; }
  int colors() const { return graph_.colors(); }

  double gamma_c(int edge, int x) const { return gamma_c_[static_cast<size_t>(edge)][static_cast<size_t>(x)]; }
  double gamma_p(int edge, int x) const { return gamma_p_[static_cast<size_t>(edge)][static_cast<size_t>(x)]; }
  double beta(int edge) const { return beta_[static_cast<size_t>(edge)]; }

  /// Upper bound on every rate for probability-measure inputs.
  double gamma_bar() const { return gamma_bar_; }
  /// Lower bound on every rate for probability-measure inputs.
  double rate_floor() const { return rate_floor_; }
  /// Largest |gamma(x+1) - gamma(x)| over all tables.
  double lipschitz() const { return lipschitz_; }

  /// sum_x gamma^c(x) m(x) and the peripheral counterpart. No validation.
  double integral_c(int edge, std::span<const double> m) const;
  double integral_p(int edge, std::span<const double> m) const;

  /// Rate from a precomputed affine part.
  double finish(int edge, double affine) const {
    const double v = affine + beta_[static_cast<size_t>(edge)];
    return v > 0.0 ? v : 0.0;
  }

  nlohmann::json to_json(int base = 0) const;
  static RateSpec from_json(const nlohmann::json& j);

 private:
  ColorGraph graph_;
  std::vector<std::vector<double>> gamma_c_;
  std::vector<std::vector<double>> gamma_p_;
  std::vector<double> beta_;
  double gamma_bar_ = 0.0;
  double rate_floor_ = 0.0;
  double lipschitz_ = 0.0;
};

/// lambda^c(nu, mu, a1, a2) on `edge`: a1 int gamma^c dnu + a2 int gamma^p dmu (+ beta).
double lambda_c(const RateSpec& spec, const Measure& nu, const Measure& mu, double a1, double a2,
                ColorEdge edge);

/// lambda^p(nu, mu_1..mu_r, a, b_1..b_r) on `edge`.
double lambda_p(const RateSpec& spec, const Measure& nu, std::span<const Measure> mus, double a,
                std::span<const double> b, ColorEdge edge);

/// Rate specs for every (block, class). A shared model applies one spec to
/// all classes of any number of blocks.
class RateModel {
 public:
  RateModel() = default;
  static RateModel shared(RateSpec spec);
  /// `specs` ordered (block 0 central, block 0 peripheral, block 1 central, ...).
  static RateModel per_class(std::vector<RateSpec> specs);

  const RateSpec& spec(int block, NodeClass cls) const;
  const ColorGraph& color_graph() const { return specs_.front().color_graph(); }
  int colors() const { return color_graph().colors(); }
  bool is_shared() const { return specs_.size() == 1; }

  /// Throws kInvalidConfiguration unless the model can drive `blocks` blocks.
  void check_blocks(int blocks) const;

  double gamma_bar() const;
  double rate_floor() const;

  nlohmann::json to_json() const;
  /// Accepts a RateSpec object, {"classes": [...]}, or a built-in model
  /// {"model": "sis" | "queue", ...}.
  static RateModel from_json(const nlohmann::json& j);

 private:
  std::vector<RateSpec> specs_;
};

/// Normalized multi-community SIS on Z = {0 susceptible, 1 infected}.
/// Central 0->1: gamma^c(x) = gamma_j x, gamma^p(x) = nu_j x.
/// Peripheral 0->1: gamma^c(x) = nu_j x, gamma^p(x) = eta x.
/// 1->0 is the state-only curing rate zeta_j.
RateModel sis_model(const std::vector<double>& gamma, const std::vector<double>& nu, double eta,
                    const std::vector<double>& zeta);

/// Finite-buffer queues on Z = {0..K-1}. Arrivals z->z+1 at
/// max(0, zeta_z - c0 (z - m)) with m the local mean queue length; services
/// z->z-1 at vartheta_z.
RateModel queue_model(int capacity, const std::vector<double>& zeta,
                      const std::vector<double>& vartheta, double c0);

}  // namespace blockmf
