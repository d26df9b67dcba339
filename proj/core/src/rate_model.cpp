#include "blockmf/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "blockmf/error.hpp"

namespace blockmf {
namespace {

constexpr double kWeightTol = 1e-9;

std::string edge_key(ColorEdge e, int base) { return fmt::format("{},{}", e.from + base, e.to + base); }

ColorEdge parse_edge_key(const std::string& key, int base) {
  const auto comma = key.find(',');
  require(comma != std::string::npos, ErrorKind::kInvalidConfiguration,
          fmt::format("edge key \"{}\" must look like \"z,z'\"", key));
  try {
    return {std::stoi(key.substr(0, comma)) - base, std::stoi(key.substr(comma + 1)) - base};
  } catch (const std::exception&) {
    fail(ErrorKind::kInvalidConfiguration, fmt::format("edge key \"{}\" is not numeric", key));
  }
}

void require_weight(double w, const char* name) {
  require(w >= 0.0 && w <= 1.0, ErrorKind::kInvalidArgument,
          fmt::format("proportion {} = {} outside [0, 1]", name, w));
}

void require_nonneg(const std::vector<double>& v, const char* name) {
  for (size_t k = 0; k < v.size(); ++k) {
    require(v[k] >= 0.0 && std::isfinite(v[k]), ErrorKind::kInvalidArgument,
            fmt::format("{}[{}] = {} must be a finite nonnegative number", name, k, v[k]));
  }
}

}  // namespace

ColorGraph::ColorGraph(int colors, std::vector<ColorEdge> edges)
    : colors_(colors), edges_(std::move(edges)) {
  require(colors >= 1, ErrorKind::kInvalidConfiguration, "color graph needs at least one color");
  out_.resize(static_cast<size_t>(colors));
  lookup_.assign(static_cast<size_t>(colors * colors), -1);
  for (size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    require(e.from >= 0 && e.from < colors && e.to >= 0 && e.to < colors,
            ErrorKind::kInvalidConfiguration,
            fmt::format("edge ({}, {}) outside colors [0, {})", e.from, e.to, colors));
    require(e.from != e.to, ErrorKind::kInvalidConfiguration,
            fmt::format("self-loop ({}, {}) in color graph", e.from, e.to));
    auto& slot = lookup_[static_cast<size_t>(e.from * colors + e.to)];
    require(slot < 0, ErrorKind::kInvalidConfiguration,
            fmt::format("duplicate edge ({}, {})", e.from, e.to));
    slot = static_cast<int>(k);
    out_[static_cast<size_t>(e.from)].push_back(static_cast<int>(k));
  }
}

std::optional<int> ColorGraph::find(int from, int to) const {
  if (from < 0 || from >= colors_ || to < 0 || to >= colors_) return std::nullopt;
  const int k = lookup_[static_cast<size_t>(from * colors_ + to)];
  if (k < 0) return std::nullopt;
  return k;
}

int ColorGraph::index_of(ColorEdge e) const {
  const auto k = find(e.from, e.to);
  require(k.has_value(), ErrorKind::kUnknownEdge, fmt::format("({}, {}) is not an admissible jump", e.from, e.to));
  return *k;
}

RateSpec::RateSpec(ColorGraph graph, std::vector<std::vector<double>> gamma_c,
                   std::vector<std::vector<double>> gamma_p, std::vector<double> beta)
    : graph_(std::move(graph)),
      gamma_c_(std::move(gamma_c)),
      gamma_p_(std::move(gamma_p)),
      beta_(std::move(beta)) {
  const auto n_edges = static_cast<size_t>(graph_.edge_count());
  const auto k = static_cast<size_t>(graph_.colors());
  if (beta_.empty()) beta_.assign(n_edges, 0.0);
  require(gamma_c_.size() == n_edges && gamma_p_.size() == n_edges && beta_.size() == n_edges,
          ErrorKind::kInvalidConfiguration, "rate tables must have one row per edge");
  rate_floor_ = std::numeric_limits<double>::infinity();
  for (size_t e = 0; e < n_edges; ++e) {
    require(gamma_c_[e].size() == k && gamma_p_[e].size() == k, ErrorKind::kInvalidConfiguration,
            fmt::format("edge {}: gamma tables need {} entries", e, k));
    double hi = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (size_t x = 0; x < k; ++x) {
      for (double g : {gamma_c_[e][x], gamma_p_[e][x]}) {
        require(g >= 0.0 && std::isfinite(g), ErrorKind::kInvalidConfiguration,
                fmt::format("edge {}: gamma entries must be finite and nonnegative (got {})", e, g));
        hi = std::max(hi, g);
        lo = std::min(lo, g);
      }
      if (x + 1 < k) {
        lipschitz_ = std::max({lipschitz_, std::abs(gamma_c_[e][x + 1] - gamma_c_[e][x]),
                               std::abs(gamma_p_[e][x + 1] - gamma_p_[e][x])});
      }
    }
    require(std::isfinite(beta_[e]), ErrorKind::kInvalidConfiguration,
            fmt::format("edge {}: beta must be finite", e));
    gamma_bar_ = std::max(gamma_bar_, std::max(0.0, hi + beta_[e]));
    rate_floor_ = std::min(rate_floor_, std::max(0.0, lo + beta_[e]));
  }
  if (n_edges == 0) rate_floor_ = 0.0;
}

double RateSpec::integral_c(int edge, std::span<const double> m) const {
  const auto& g = gamma_c_[static_cast<size_t>(edge)];
  double s = 0.0;
  for (size_t x = 0; x < g.size(); ++x) s += g[x] * m[x];
  return s;
}

double RateSpec::integral_p(int edge, std::span<const double> m) const {
  const auto& g = gamma_p_[static_cast<size_t>(edge)];
  double s = 0.0;
  for (size_t x = 0; x < g.size(); ++x) s += g[x] * m[x];
  return s;
}

nlohmann::json RateSpec::to_json(int base) const {
  nlohmann::json j;
  j["colors"] = colors();
  j["base"] = base;
  j["edges"] = nlohmann::json::array();
  j["gamma_c"] = nlohmann::json::object();
  j["gamma_p"] = nlohmann::json::object();
  j["beta"] = nlohmann::json::object();
  for (int e = 0; e < graph_.edge_count(); ++e) {
    const auto& ce = graph_.edge(e);
    j["edges"].push_back({ce.from + base, ce.to + base});
    const auto key = edge_key(ce, base);
    j["gamma_c"][key] = gamma_c_[static_cast<size_t>(e)];
    j["gamma_p"][key] = gamma_p_[static_cast<size_t>(e)];
    j["beta"][key] = beta_[static_cast<size_t>(e)];
  }
  return j;
}

RateSpec RateSpec::from_json(const nlohmann::json& j) {
  for (const auto& [key, _] : j.items()) {
    require(key == "colors" || key == "base" || key == "edges" || key == "gamma_c" ||
                key == "gamma_p" || key == "beta",
            ErrorKind::kInvalidConfiguration, fmt::format("unknown rate spec field \"{}\"", key));
  }
  const int k = j.at("colors").get<int>();
  const int base = j.value("base", 0);
  require(base == 0 || base == 1, ErrorKind::kInvalidConfiguration, "\"base\" must be 0 or 1");
  std::vector<ColorEdge> edges;
  for (const auto& e : j.at("edges")) {
    require(e.is_array() && e.size() == 2, ErrorKind::kInvalidConfiguration,
            "color edge must be a pair [z, z']");
    edges.push_back({e[0].get<int>() - base, e[1].get<int>() - base});
  }
  ColorGraph graph(k, edges);
  const auto n_edges = static_cast<size_t>(graph.edge_count());
  std::vector<std::vector<double>> gc(n_edges), gp(n_edges);
  std::vector<double> beta(n_edges, 0.0);
  auto load_table = [&](const char* name, std::vector<std::vector<double>>& out) {
    std::vector<bool> seen(n_edges, false);
    for (const auto& [key, row] : j.at(name).items()) {
      const int e = graph.index_of(parse_edge_key(key, base));
      out[static_cast<size_t>(e)] = row.get<std::vector<double>>();
      seen[static_cast<size_t>(e)] = true;
    }
    for (size_t e = 0; e < n_edges; ++e) {
      require(seen[e], ErrorKind::kInvalidConfiguration,
              fmt::format("{} has no row for edge \"{}\"", name, edge_key(graph.edge(static_cast<int>(e)), base)));
    }
  };
  load_table("gamma_c", gc);
  load_table("gamma_p", gp);
  if (j.contains("beta")) {
    for (const auto& [key, v] : j.at("beta").items()) {
      beta[static_cast<size_t>(graph.index_of(parse_edge_key(key, base)))] = v.get<double>();
    }
  }
  return RateSpec(std::move(graph), std::move(gc), std::move(gp), std::move(beta));
}

double lambda_c(const RateSpec& spec, const Measure& nu, const Measure& mu, double a1, double a2,
                ColorEdge edge) {
  const int e = spec.color_graph().index_of(edge);
  require_weight(a1, "a1");
  require_weight(a2, "a2");
  require(std::abs(a1 + a2 - 1.0) <= kWeightTol, ErrorKind::kInvalidArgument,
          fmt::format("a1 + a2 = {} (must be 1)", a1 + a2));
  const auto k = static_cast<size_t>(spec.colors());
  require(nu.size() == k && mu.size() == k, ErrorKind::kInvalidArgument,
          fmt::format("measures must live on {} colors", k));
  nu.require_probability(1e-9);
  mu.require_probability(1e-9);
  return spec.finish(e, a1 * spec.integral_c(e, nu.weights()) + a2 * spec.integral_p(e, mu.weights()));
}

double lambda_p(const RateSpec& spec, const Measure& nu, std::span<const Measure> mus, double a,
                std::span<const double> b, ColorEdge edge) {
  const int e = spec.color_graph().index_of(edge);
  require(mus.size() == b.size() && !mus.empty(), ErrorKind::kInvalidArgument,
          "need one peripheral measure per proportion b_i");
  require_weight(a, "a");
  double total = a;
  for (double bi : b) {
    require_weight(bi, "b_i");
    total += bi;
  }
  require(std::abs(total - 1.0) <= kWeightTol, ErrorKind::kInvalidArgument,
          fmt::format("a + sum(b) = {} (must be 1)", total));
  const auto k = static_cast<size_t>(spec.colors());
  require(nu.size() == k, ErrorKind::kInvalidArgument, fmt::format("measures must live on {} colors", k));
  nu.require_probability(1e-9);
  double affine = a * spec.integral_c(e, nu.weights());
  for (size_t i = 0; i < mus.size(); ++i) {
    require(mus[i].size() == k, ErrorKind::kInvalidArgument, fmt::format("measures must live on {} colors", k));
    mus[i].require_probability(1e-9);
    affine += b[i] * spec.integral_p(e, mus[i].weights());
  }
  return spec.finish(e, affine);
}

RateModel RateModel::shared(RateSpec spec) {
  RateModel m;
  m.specs_.push_back(std::move(spec));
  return m;
}

RateModel RateModel::per_class(std::vector<RateSpec> specs) {
  require(!specs.empty() && specs.size() % 2 == 0, ErrorKind::kInvalidConfiguration,
          "per-class rate model needs a central and a peripheral spec per block");
  for (const auto& s : specs) {
    require(s.color_graph() == specs.front().color_graph(), ErrorKind::kInvalidConfiguration,
            "all class specs must share one color graph");
  }
  RateModel m;
  m.specs_ = std::move(specs);
  return m;
}

const RateSpec& RateModel::spec(int block, NodeClass cls) const {
  if (is_shared()) return specs_.front();
  return specs_.at(static_cast<size_t>(2 * block + static_cast<int>(cls)));
}

void RateModel::check_blocks(int blocks) const {
  require(!specs_.empty(), ErrorKind::kInvalidConfiguration, "empty rate model");
  require(is_shared() || static_cast<int>(specs_.size()) == 2 * blocks, ErrorKind::kInvalidConfiguration,
          fmt::format("rate model covers {} blocks, graph has {}", specs_.size() / 2, blocks));
}

double RateModel::gamma_bar() const {
  double g = 0.0;
  for (const auto& s : specs_) g = std::max(g, s.gamma_bar());
  return g;
}

double RateModel::rate_floor() const {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& s : specs_) g = std::min(g, s.rate_floor());
  return g;
}

nlohmann::json RateModel::to_json() const {
  if (is_shared()) return specs_.front().to_json();
  nlohmann::json j;
  j["classes"] = nlohmann::json::array();
  for (const auto& s : specs_) j["classes"].push_back(s.to_json());
  return j;
}

RateModel RateModel::from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorKind::kInvalidConfiguration, "rates must be a JSON object");
  if (j.contains("model")) {
    const auto model = j.at("model").get<std::string>();
    auto allow = [&](std::initializer_list<const char*> keys) {
      for (const auto& [key, _] : j.items()) {
        bool ok = key == "model";
        for (const char* k : keys) ok = ok || key == k;
        require(ok, ErrorKind::kInvalidConfiguration,
                fmt::format("unknown field \"{}\" for model \"{}\"", key, model));
      }
    };
    if (model == "sis") {
      allow({"gamma", "nu", "eta", "zeta"});
      return sis_model(j.at("gamma").get<std::vector<double>>(), j.at("nu").get<std::vector<double>>(),
                       j.at("eta").get<double>(), j.at("zeta").get<std::vector<double>>());
    }
    if (model == "queue") {
      allow({"K", "zeta", "vartheta", "c0"});
      return queue_model(j.at("K").get<int>(), j.at("zeta").get<std::vector<double>>(),
                         j.at("vartheta").get<std::vector<double>>(), j.value("c0", 0.0));
    }
    fail(ErrorKind::kInvalidConfiguration, fmt::format("unknown rate model \"{}\"", model));
  }
  if (j.contains("classes")) {
    require(j.size() == 1, ErrorKind::kInvalidConfiguration, "\"classes\" must be the only rates field");
    std::vector<RateSpec> specs;
    for (const auto& s : j.at("classes")) specs.push_back(RateSpec::from_json(s));
    return per_class(std::move(specs));
  }
  return shared(RateSpec::from_json(j));
}

RateModel sis_model(const std::vector<double>& gamma, const std::vector<double>& nu, double eta,
                    const std::vector<double>& zeta) {
  const size_t r = gamma.size();
  require(r >= 1 && nu.size() == r && zeta.size() == r, ErrorKind::kInvalidArgument,
          "SIS parameters gamma, nu, zeta need one entry per block");
  require_nonneg(gamma, "gamma");
  require_nonneg(nu, "nu");
  require_nonneg(zeta, "zeta");
  require(eta >= 0.0 && std::isfinite(eta), ErrorKind::kInvalidArgument, "eta must be nonnegative");
  const ColorGraph graph(2, {{0, 1}, {1, 0}});
  auto linear = [](double slope) { return std::vector<double>{0.0, slope}; };
  const std::vector<double> zero{0.0, 0.0};
  std::vector<RateSpec> specs;
  for (size_t j = 0; j < r; ++j) {
    specs.emplace_back(graph, std::vector{linear(gamma[j]), zero}, std::vector{linear(nu[j]), zero},
                       std::vector<double>{0.0, zeta[j]});
    specs.emplace_back(graph, std::vector{linear(nu[j]), zero}, std::vector{linear(eta), zero},
                       std::vector<double>{0.0, zeta[j]});
  }
  return RateModel::per_class(std::move(specs));
}

RateModel queue_model(int capacity, const std::vector<double>& zeta,
                      const std::vector<double>& vartheta, double c0) {
  require(capacity >= 2, ErrorKind::kInvalidArgument, fmt::format("queue needs K >= 2 (got {})", capacity));
  const auto k = static_cast<size_t>(capacity);
  require(zeta.size() == k && vartheta.size() == k, ErrorKind::kInvalidArgument,
          fmt::format("zeta and vartheta need {} entries", k));
  require_nonneg(zeta, "zeta");
  require_nonneg(vartheta, "vartheta");
  require(c0 >= 0.0 && std::isfinite(c0), ErrorKind::kInvalidArgument, "c0 must be nonnegative");
  std::vector<ColorEdge> edges;
  std::vector<std::vector<double>> gc, gp;
  std::vector<double> beta;
  std::vector<double> slope(k);
  for (size_t x = 0; x < k; ++x) slope[x] = c0 * static_cast<double>(x);
  for (int z = 0; z < capacity; ++z) {
    const auto zu = static_cast<size_t>(z);
    if (z + 1 < capacity) {
      edges.push_back({z, z + 1});
      gc.push_back(slope);
      gp.push_back(slope);
      beta.push_back(zeta[zu] - c0 * z);
    }
    if (z >= 1) {
      edges.push_back({z, z - 1});
      gc.emplace_back(k, 0.0);
      gp.emplace_back(k, 0.0);
      beta.push_back(vartheta[zu]);
    }
  }
  return RateModel::shared(RateSpec(ColorGraph(capacity, std::move(edges)), std::move(gc), std::move(gp),
                                    std::move(beta)));
}

}  // namespace blockmf
