// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_EXPERIMENT_HPP
#define BILEVEL_BO_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "bilevel_bo/bilevel.hpp"
#include "bilevel_bo/compare.hpp"
#include "bilevel_bo/objective.hpp"
#include "bilevel_bo/space.hpp"

namespace bbo {

/// Config problem anchored to a 1-based line of the source file (0 = unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line) : std::runtime_error(message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentObjective {
  std::string label;
  ObjectiveSpec spec;
  SearchSpace space;
};

/// Externally reported per-method averages, re-checked by the report.
struct ReferenceRow {
  std::string label;
  double avg = 0.0;
  std::optional<double> printed_rate;
};

struct ReferenceTable {
  std::string baseline;
  std::vector<ReferenceRow> rows;
};

struct CompareSection {
  std::vector<ExperimentObjective> objectives;
  std::vector<Pairing> pairings;
  std::size_t baseline = 0;
  std::vector<std::uint64_t> seeds;
  std::optional<ReferenceTable> reference;
};

struct ExperimentConfig {
  std::optional<ExperimentObjective> objective;
  StudyConfig study;
  std::string output_dir = "bilevel_bo_out";
  std::optional<CompareSection> compare;
};

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <typename T>
T scalar(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) throw ConfigError(what + " must be a scalar", line_of(n));
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("invalid value '" + n.Scalar() + "' for " + what, line_of(n));
  }
}

inline void check_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!map.IsMap()) throw ConfigError(where + " must be a mapping", line_of(map));
  for (const auto& kv : map) {
    const auto key = kv.first.Scalar();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where, line_of(kv.first));
  }
}

inline AcquisitionKind parse_acquisition(const YAML::Node& n, double default_kappa) {
  if (n.IsScalar()) {
    const auto s = n.Scalar();
    if (s == "ei" || s == "EI") return AcquisitionKind::ei();
    if (s == "ucb" || s == "UCB") {
      if (!(default_kappa > 0.0)) throw ConfigError("kappa must be positive", line_of(n));
      return AcquisitionKind::ucb(default_kappa);
    }
    throw ConfigError("unknown acquisition '" + s + "' (expected ei or ucb)", line_of(n));
  }
  check_keys(n, {"kind", "kappa"}, "acquisition");
  const auto kind = scalar<std::string>(n["kind"], "acquisition kind");
  if (kind == "ei" || kind == "EI") return AcquisitionKind::ei();
  if (kind != "ucb" && kind != "UCB") throw ConfigError("unknown acquisition '" + kind + "'", line_of(n["kind"]));
  const double kappa = n["kappa"] ? scalar<double>(n["kappa"], "kappa") : default_kappa;
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive", line_of(n["kappa"] ? n["kappa"] : n));
  return AcquisitionKind::ucb(kappa);
}

inline SearchSpace parse_space(const YAML::Node& n, bool require_both_levels) {
  if (!n.IsSequence()) throw ConfigError("space must be a list of parameters", line_of(n));
  std::vector<ParamSpec> params;
  std::vector<int> lines;
  for (const auto& item : n) {
    check_keys(item, {"name", "kind", "low", "high", "choices", "level"}, "parameter");
    ParamSpec p;
    p.name = item["name"] ? scalar<std::string>(item["name"], "name") : "";
    const auto kind = item["kind"] ? scalar<std::string>(item["kind"], "kind") : "";
    if (kind == "uniform") p.kind = ParamKind::uniform;
    else if (kind == "log-uniform" || kind == "log_uniform") p.kind = ParamKind::log_uniform;
    else if (kind == "categorical") p.kind = ParamKind::categorical;
    else throw ConfigError("parameter '" + p.name + "': unknown kind '" + kind + "'", line_of(item));
    if (p.is_continuous()) {
      if (!item["low"] || !item["high"])
        throw ConfigError("parameter '" + p.name + "': continuous parameters need low and high", line_of(item));
      p.low = scalar<double>(item["low"], "low");
      p.high = scalar<double>(item["high"], "high");
    } else {
      if (!item["choices"] || !item["choices"].IsSequence())
        throw ConfigError("parameter '" + p.name + "': categorical parameters need a choices list", line_of(item));
      for (const auto& c : item["choices"]) {
        if (!c.IsScalar()) throw ConfigError("choices must be scalars", line_of(c));
        auto d = parse_double(c.Scalar());
        if (d && std::isfinite(*d)) p.choices.emplace_back(*d);
        else p.choices.emplace_back(c.Scalar());
      }
    }
    const auto level = item["level"] ? scalar<std::string>(item["level"], "level") : "outer";
    if (level == "inner") p.level = Level::inner;
    else if (level == "outer") p.level = Level::outer;
    else throw ConfigError("parameter '" + p.name + "': level must be inner or outer", line_of(item["level"]));
    params.push_back(std::move(p));
    lines.push_back(line_of(item));
  }
  SearchSpace space(std::move(params));
  const auto errors = validate(space, require_both_levels);
  if (!errors.empty()) {
    const auto& e = errors.front();
    int line = line_of(n);
    for (std::size_t i = 0; i < space.params().size(); ++i)
      if (!e.param.empty() && space.params()[i].name == e.param) line = lines[i];
    throw ConfigError(e.param.empty() ? e.message : "parameter '" + e.param + "': " + e.message, line);
  }
  return space;
}

inline ExperimentObjective parse_objective(const YAML::Node& n, const YAML::Node& default_space, bool bilevel) {
  check_keys(n, {"builtin", "command", "timeout", "noise_std", "label", "space"}, "objective");
  ExperimentObjective o;
  if (n["builtin"] && n["command"]) throw ConfigError("objective: set either builtin or command, not both", line_of(n));
  if (n["builtin"]) {
    const auto name = scalar<std::string>(n["builtin"], "builtin");
    bool known = false;
    for (const auto& b : builtin::names()) known = known || b == name;
    if (!known) throw ConfigError("unknown builtin objective '" + name + "'", line_of(n["builtin"]));
    o.spec = ObjectiveSpec::builtin(name, n["noise_std"] ? scalar<double>(n["noise_std"], "noise_std") : 0.0);
    if (!(o.spec.noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0", line_of(n["noise_std"]));
  } else if (n["command"]) {
    std::vector<std::string> cmd;
    if (n["command"].IsScalar()) cmd.push_back(n["command"].Scalar());
    else if (n["command"].IsSequence())
      for (const auto& a : n["command"]) cmd.push_back(scalar<std::string>(a, "command argument"));
    if (cmd.empty()) throw ConfigError("objective command is empty", line_of(n["command"]));
    const double timeout = n["timeout"] ? scalar<double>(n["timeout"], "timeout") : 3600.0;
    if (!(timeout > 0.0)) throw ConfigError("timeout must be positive", line_of(n["timeout"]));
    o.spec = ObjectiveSpec::external(std::move(cmd), timeout);
  } else {
    throw ConfigError("objective needs builtin or command", line_of(n));
  }
  o.label = n["label"] ? scalar<std::string>(n["label"], "label") : o.spec.label();

  const YAML::Node space_node = n["space"] ? n["space"] : default_space;
  if (space_node) o.space = parse_space(space_node, bilevel);
  else if (o.spec.kind == ObjectiveKind::builtin) o.space = builtin::default_space(o.spec.builtin_name);
  else throw ConfigError("external objective needs a space declaration", line_of(n));

  if (o.spec.kind == ObjectiveKind::builtin) {
    try {
      BuiltinObjective check(o.spec.builtin_name, o.space, o.spec.noise_std);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what(), line_of(n));
    }
  }
  return o;
}

inline void parse_study(const YAML::Node& n, StudyConfig& c) {
  check_keys(n,
             {"mode", "outer_budget", "inner_budget", "init_outer", "init_inner", "candidates", "acq_inner",
              "acq_outer", "kappa", "seed"},
             "study");
  if (n["mode"]) {
    const auto m = scalar<std::string>(n["mode"], "mode");
    if (m == "bilevel") c.mode = StudyMode::bilevel;
    else if (m == "single-level" || m == "single_level") c.mode = StudyMode::single_level;
    else if (m == "random") c.mode = StudyMode::random;
    else throw ConfigError("unknown mode '" + m + "'", line_of(n["mode"]));
  }
  auto positive = [&](const char* key, int& field) {
    if (!n[key]) return;
    field = scalar<int>(n[key], key);
    if (field < 1) throw ConfigError(std::string(key) + " must be positive", line_of(n[key]));
  };
  positive("outer_budget", c.outer_budget);
  positive("inner_budget", c.inner_budget);
  positive("init_outer", c.init_outer);
  positive("init_inner", c.init_inner);
  if (n["candidates"]) {
    const int cand = scalar<int>(n["candidates"], "candidates");
    if (cand < 1) throw ConfigError("candidates must be positive", line_of(n["candidates"]));
    c.candidates = static_cast<std::size_t>(cand);
  }
  const double kappa = n["kappa"] ? scalar<double>(n["kappa"], "kappa") : 2.0;
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive", line_of(n["kappa"]));
  if (n["acq_inner"]) c.acq_inner = parse_acquisition(n["acq_inner"], kappa);
  if (n["acq_outer"]) c.acq_outer = parse_acquisition(n["acq_outer"], kappa);
  if (n["seed"]) c.seed = scalar<std::uint64_t>(n["seed"], "seed");
  if (c.init_outer > c.outer_budget) throw ConfigError("init_outer must not exceed outer_budget", line_of(n));
  if (c.init_inner > c.inner_budget) throw ConfigError("init_inner must not exceed inner_budget", line_of(n));
}

inline std::vector<std::uint64_t> parse_seeds(const YAML::Node& n) {
  std::vector<std::uint64_t> seeds;
  if (n.IsSequence()) {
    for (const auto& s : n) seeds.push_back(scalar<std::uint64_t>(s, "seed"));
  } else if (n.IsMap()) {
    check_keys(n, {"count", "start"}, "seeds");
    const int count = scalar<int>(n["count"], "seeds.count");
    const std::uint64_t start = n["start"] ? scalar<std::uint64_t>(n["start"], "seeds.start") : 0;
    for (int i = 0; i < count; ++i) seeds.push_back(start + static_cast<std::uint64_t>(i));
  } else {
    seeds.push_back(scalar<std::uint64_t>(n, "seeds"));
  }
  if (seeds.empty()) throw ConfigError("seeds list is empty", line_of(n));
  return seeds;
}

inline CompareSection parse_compare(const YAML::Node& n, const YAML::Node& root, const StudyConfig& study) {
  check_keys(n, {"objectives", "pairings", "baseline", "seeds", "reference"}, "compare");
  CompareSection c;
  const YAML::Node objs = n["objectives"];
  if (objs) {
    if (!objs.IsSequence() || objs.size() == 0) throw ConfigError("compare.objectives must be a non-empty list", line_of(objs));
    for (const auto& o : objs) c.objectives.push_back(parse_objective(o, root["space"], false));
  } else if (root["objective"]) {
    c.objectives.push_back(parse_objective(root["objective"], root["space"], false));
  } else {
    throw ConfigError("compare needs objectives", line_of(n));
  }

  if (!n["pairings"] || !n["pairings"].IsSequence() || n["pairings"].size() == 0)
    throw ConfigError("compare.pairings must be a non-empty list", line_of(n));
  const double kappa = root["study"] && root["study"]["kappa"] ? scalar<double>(root["study"]["kappa"], "kappa") : 2.0;
  bool any_bilevel = false;
  for (const auto& p : n["pairings"]) {
    check_keys(p, {"label", "mode", "inner", "outer", "acquisition", "budget"}, "pairing");
    Pairing pr;
    const auto mode = p["mode"] ? scalar<std::string>(p["mode"], "mode") : "bilevel";
    if (mode == "bilevel") {
      if (!p["inner"] || !p["outer"]) throw ConfigError("bilevel pairing needs inner and outer", line_of(p));
      pr = Pairing::bilevel(parse_acquisition(p["inner"], kappa), parse_acquisition(p["outer"], kappa));
      any_bilevel = true;
    } else if (mode == "random") {
      pr = Pairing::random_search();
    } else if (mode == "single-level" || mode == "single_level") {
      pr = Pairing::single_level(p["acquisition"] ? parse_acquisition(p["acquisition"], kappa) : AcquisitionKind::ei());
    } else {
      throw ConfigError("unknown pairing mode '" + mode + "'", line_of(p["mode"]));
    }
    if (p["label"]) pr.label = scalar<std::string>(p["label"], "label");
    if (p["budget"]) {
      pr.budget = scalar<int>(p["budget"], "budget");
      if (*pr.budget < 1) throw ConfigError("budget must be positive", line_of(p["budget"]));
    }
    c.pairings.push_back(std::move(pr));
  }
  if (any_bilevel)
    for (std::size_t i = 0; i < c.objectives.size(); ++i) {
      const auto& space = c.objectives[i].space;
      if (!space.has_level(Level::inner) || !space.has_level(Level::outer))
        throw ConfigError("objective '" + c.objectives[i].label + "' needs inner and outer parameters for bilevel pairings",
                          line_of(objs ? objs[i] : root["objective"]));
    }

  if (!n["baseline"]) throw ConfigError("compare.baseline is required", line_of(n));
  const auto baseline = scalar<std::string>(n["baseline"], "baseline");
  bool found = false;
  for (std::size_t i = 0; i < c.pairings.size(); ++i)
    if (c.pairings[i].label == baseline) {
      c.baseline = i;
      found = true;
      break;
    }
  if (!found) throw ConfigError("baseline '" + baseline + "' is not one of the pairings", line_of(n["baseline"]));

  c.seeds = n["seeds"] ? parse_seeds(n["seeds"]) : std::vector<std::uint64_t>{study.seed};

  if (const auto ref = n["reference"]) {
    check_keys(ref, {"baseline", "rows"}, "reference");
    ReferenceTable t;
    t.baseline = scalar<std::string>(ref["baseline"], "reference.baseline");
    if (!ref["rows"] || !ref["rows"].IsSequence()) throw ConfigError("reference.rows must be a list", line_of(ref));
    bool base_found = false;
    for (const auto& r : ref["rows"]) {
      check_keys(r, {"label", "avg", "printed_rate"}, "reference row");
      ReferenceRow row{scalar<std::string>(r["label"], "label"), scalar<double>(r["avg"], "avg"), {}};
      if (r["printed_rate"]) row.printed_rate = scalar<double>(r["printed_rate"], "printed_rate");
      base_found = base_found || row.label == t.baseline;
      t.rows.push_back(std::move(row));
    }
    if (!base_found) throw ConfigError("reference baseline '" + t.baseline + "' has no row", line_of(ref["baseline"]));
    c.reference = std::move(t);
  }
  return c;
}

}  // namespace detail

inline ExperimentConfig parse_experiment(const YAML::Node& root) {
  if (!root.IsMap()) throw ConfigError("config must be a mapping", detail::line_of(root));
  detail::check_keys(root, {"space", "objective", "study", "output", "compare"}, "config");
  ExperimentConfig cfg;
  if (root["study"]) detail::parse_study(root["study"], cfg.study);
  if (root["output"]) cfg.output_dir = detail::scalar<std::string>(root["output"], "output");
  if (root["objective"])
    cfg.objective = detail::parse_objective(root["objective"], root["space"], cfg.study.mode == StudyMode::bilevel);
  if (root["compare"]) cfg.compare = detail::parse_compare(root["compare"], root, cfg.study);
  if (!cfg.objective && !cfg.compare) throw ConfigError("config needs an objective", 1);
  return cfg;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot read config file", 0);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  return parse_experiment(root);
}

inline ExperimentConfig parse_experiment_text(const std::string& text) {
  try {
    return parse_experiment(YAML::Load(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
}

}  // namespace bbo

#endif  // BILEVEL_BO_EXPERIMENT_HPP
