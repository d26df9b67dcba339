#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "blockmf/error.hpp"
#include "blockmf/mean_field.hpp"

namespace blockmf::cli {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::kInvalidConfiguration, what); }

const std::set<std::string> kFields{"schema", "seed",     "graph",  "rates", "targets", "family", "init",   "horizon",
                                    "dt",     "grid",     "replicas", "N_list", "tagged", "picard", "flow", "output",
                                    "oracle"};

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad(fmt::format("cannot open {}", path.string()));
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = text.substr(0, std::min(text.size(), e.byte));
    const auto line = 1 + std::count(upto.begin(), upto.end(), '\n');
    const auto col = upto.size() - (upto.rfind('\n') == std::string::npos ? 0 : upto.rfind('\n') + 1);
    bad(fmt::format("{}:{}:{}: malformed JSON: {}", path.string(), line, col, e.what()));
  }
}

// Runs `parse` and prefixes any failure with the field name.
template <class F>
auto field(const std::string& name, F&& parse) -> decltype(parse()) {
  try {
    return parse();
  } catch (const Error& e) {
    if (!e.is_validation()) throw;
    std::string what = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
    bad(fmt::format("field \"{}\": {}", name, what));
  } catch (const json::exception& e) {
    bad(fmt::format("field \"{}\": {}", name, e.what()));
  }
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) bad(fmt::format("{} must be an object", where));
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      bad(fmt::format("unknown field \"{}\" in {}", key, where));
    }
  }
}

// Follows {"file": "..."} indirections relative to `base`.
json resolve(const json& j, const std::filesystem::path& base) {
  if (j.is_object() && j.contains("file")) {
    only_keys(j, {"file"}, "file reference");
    const auto path = base / j.at("file").get<std::string>();
    if (!std::filesystem::exists(path)) bad(fmt::format("referenced file {} does not exist", path.string()));
    return read_json(path);
  }
  return j;
}

std::optional<double> parse_fraction(const json& design) {
  if (design.is_string()) {
    if (design.get<std::string>() != "complete") bad("peripheral design must be \"complete\" or {\"fraction\": f}");
    return std::nullopt;
  }
  only_keys(design, {"fraction"}, "peripheral design");
  const double f = design.at("fraction").get<double>();
  if (!(f > 0.0 && f <= 1.0)) bad(fmt::format("fraction {} must lie in (0, 1]", f));
  return f;
}

std::vector<BlockSize> parse_sizes(const json& blocks) {
  std::vector<BlockSize> sizes;
  for (const auto& b : blocks) {
    only_keys(b, {"central", "peripheral"}, "block");
    sizes.push_back({b.at("central").get<int>(), b.at("peripheral").get<int>()});
  }
  return sizes;
}

BlockGraph parse_graph(const json& j) {
  if (j.is_object() && j.contains("peripheral")) {
    only_keys(j, {"blocks", "peripheral"}, "graph");
    const auto sizes = parse_sizes(j.at("blocks"));
    const auto fraction = parse_fraction(j.at("peripheral"));
    return fraction ? build_regular_peripheral(sizes, *fraction) : build_complete_peripheral(sizes);
  }
  return BlockGraph::from_json(j);
}

}  // namespace

BlockGraph FamilySpec::build(int total) const {
  if (!fraction) return complete_graph_for_total(total, alpha, p_c);
  std::vector<BlockSize> sizes;
  for (size_t j = 0; j < alpha.size(); ++j) {
    const double nj = alpha[j] * total;
    const double nc = p_c[j] * std::round(nj);
    require(std::abs(nj - std::round(nj)) < 1e-9 && std::abs(nc - std::round(nc)) < 1e-9,
            ErrorKind::kInvalidConfiguration,
            fmt::format("N = {} does not split into integer block sizes for block {}", total, j));
    const int n = static_cast<int>(std::round(nj));
    const int c = static_cast<int>(std::round(nc));
    sizes.push_back({c, n - c});
  }
  return build_regular_peripheral(sizes, *fraction);
}

int Scenario::blocks() const { return static_cast<int>(init.size() / 2); }

ProportionTargets Scenario::limit_targets() const {
  if (targets) return *targets;
  if (graph) return ProportionTargets::from_graph(*graph);
  bad("the scenario needs \"targets\" or a \"graph\" to derive them from");
}

FamilySpec Scenario::graph_family() const {
  if (family) return *family;
  if (!graph) bad("experiments over N need a \"family\" or a \"graph\" to take proportions from");
  if (!graph->complete_peripheral()) bad("the graph is not complete; declare a \"family\" with a fraction");
  FamilySpec f;
  for (const auto& s : graph->block_sizes()) {
    f.alpha.push_back(static_cast<double>(s.total()) / graph->node_count());
    f.p_c.push_back(static_cast<double>(s.central) / s.total());
  }
  return f;
}

const BlockGraph& Scenario::require_graph(const char* command) const {
  if (!graph) bad(fmt::format("`{}` needs a \"graph\"", command));
  return *graph;
}

double Scenario::step() const { return dt ? *dt : default_dt(model); }

Scenario load_scenario(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) bad(fmt::format("scenario file {} does not exist", path.string()));
  const json j = read_json(path);
  if (!j.is_object()) bad("scenario must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kFields.count(key)) bad(fmt::format("unknown field \"{}\"", key));
  }
  const auto base = path.parent_path();
  Scenario s;
  s.source = path;

  field("schema", [&] {
    if (!j.contains("schema")) bad("missing (expected \"blockmf/1\")");
    const auto v = j.at("schema").get<std::string>();
    if (v != "blockmf/1") bad(fmt::format("unsupported schema \"{}\" (expected \"blockmf/1\")", v));
  });
  s.seed = field("seed", [&] {
    if (!j.contains("seed")) bad("missing; a seed is mandatory");
    return j.at("seed").get<std::uint64_t>();
  });
  if (j.contains("graph")) s.graph = field("graph", [&] { return parse_graph(resolve(j.at("graph"), base)); });
  s.model = field("rates", [&] {
    if (!j.contains("rates")) bad("missing");
    return RateModel::from_json(resolve(j.at("rates"), base));
  });
  if (j.contains("targets")) {
    s.targets = field("targets", [&] {
      auto t = ProportionTargets::from_json(resolve(j.at("targets"), base));
      t.validate();
      return t;
    });
  }
  if (j.contains("family")) {
    s.family = field("family", [&] {
      const auto& f = j.at("family");
      only_keys(f, {"alpha", "p_c", "peripheral"}, "family");
      FamilySpec spec;
      spec.alpha = f.at("alpha").get<std::vector<double>>();
      spec.p_c = f.at("p_c").get<std::vector<double>>();
      if (spec.alpha.size() != spec.p_c.size() || spec.alpha.empty()) bad("alpha and p_c need one entry per block");
      if (f.contains("peripheral")) spec.fraction = parse_fraction(f.at("peripheral"));
      return spec;
    });
  }
  s.init = field("init", [&] {
    if (!j.contains("init")) bad("missing");
    std::vector<Measure> init;
    for (const auto& m : j.at("init")) {
      init.emplace_back(m.get<std::vector<double>>());
      init.back().require_probability(1e-9);
      if (static_cast<int>(init.back().size()) != s.model.colors()) {
        bad(fmt::format("measure {} has {} colors, the rates have {}", init.size() - 1, init.back().size(),
                        s.model.colors()));
      }
    }
    if (init.empty() || init.size() % 2 != 0) bad("need one measure per (block, class): 2r entries");
    return init;
  });
  const int r = s.blocks();
  field("rates", [&] { s.model.check_blocks(r); });
  if (s.graph && s.graph->block_count() != r) {
    bad(fmt::format("field \"graph\": {} blocks, but \"init\" describes {}", s.graph->block_count(), r));
  }
  if (s.targets && s.targets->block_count() != r) {
    bad(fmt::format("field \"targets\": {} blocks, but \"init\" describes {}", s.targets->block_count(), r));
  }
  if (s.family && static_cast<int>(s.family->alpha.size()) != r) {
    bad(fmt::format("field \"family\": {} blocks, but \"init\" describes {}", s.family->alpha.size(), r));
  }
  s.horizon = field("horizon", [&] {
    if (!j.contains("horizon")) bad("missing");
    const double t = j.at("horizon").get<double>();
    if (!(t > 0.0 && std::isfinite(t))) bad(fmt::format("{} must be positive", t));
    return t;
  });
  if (j.contains("dt")) {
    s.dt = field("dt", [&] {
      const double v = j.at("dt").get<double>();
      if (!(v > 0.0 && v <= s.horizon)) bad(fmt::format("{} must lie in (0, horizon]", v));
      return v;
    });
  }
  if (j.contains("grid")) {
    s.grid = field("grid", [&] {
      const int g = j.at("grid").get<int>();
      if (g < 2) bad(fmt::format("{} must be at least 2", g));
      return g;
    });
  }
  if (j.contains("replicas")) {
    s.replicas = field("replicas", [&] {
      const int n = j.at("replicas").get<int>();
      if (n < 2) bad(fmt::format("{} must be at least 2", n));
      return n;
    });
  }
  if (j.contains("N_list")) {
    s.n_list = field("N_list", [&] {
      auto v = j.at("N_list").get<std::vector<int>>();
      for (size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 2) bad(fmt::format("entry {} must be at least 2", v[i]));
        if (i > 0 && v[i] <= v[i - 1]) bad("entries must be strictly increasing");
      }
      return v;
    });
  }
  s.tagged = field("tagged", [&] {
    std::vector<TaggedNode> out;
    if (!j.contains("tagged")) {
      out.push_back({0, NodeClass::kCentral, 0});
      out.push_back({r - 1, NodeClass::kPeripheral, 0});
      return out;
    }
    for (const auto& t : j.at("tagged")) {
      only_keys(t, {"block", "class", "index"}, "tagged node");
      TaggedNode n;
      n.block = t.at("block").get<int>();
      const auto cls = t.at("class").get<std::string>();
      if (cls != "c" && cls != "p") bad(fmt::format("class \"{}\" must be \"c\" or \"p\"", cls));
      n.cls = cls == "c" ? NodeClass::kCentral : NodeClass::kPeripheral;
      n.index = t.value("index", 0);
      if (n.block < 0 || n.block >= r || n.index < 0) bad("block or index out of range");
      out.push_back(n);
    }
    if (out.empty() || out.size() > 3) bad("between 1 and 3 tagged nodes");
    return out;
  });
  if (j.contains("picard")) {
    s.picard = field("picard", [&] {
      const auto& p = j.at("picard");
      only_keys(p, {"tol", "max_iter"}, "picard");
      PicardSettings ps;
      ps.tol = p.value("tol", ps.tol);
      ps.max_iter = p.value("max_iter", ps.max_iter);
      if (!(ps.tol > 0.0) || ps.max_iter < 1) bad("tol must be positive and max_iter at least 1");
      return ps;
    });
  }
  if (j.contains("flow")) s.flow = field("flow", [&] { return base / j.at("flow").get<std::string>(); });
  if (j.contains("output")) s.output = field("output", [&] { return base / j.at("output").get<std::string>(); });
  if (j.contains("oracle")) {
    s.oracle_tol = field("oracle", [&] {
      const auto& o = j.at("oracle");
      only_keys(o, {"tol"}, "oracle");
      const double tol = o.at("tol").get<double>();
      if (!(tol > 0.0 && tol < 1.0)) bad("tol must lie in (0, 1)");
      return tol;
    });
  }
  return s;
}

}  // namespace blockmf::cli
