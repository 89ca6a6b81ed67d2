// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_SERIALIZE_HPP
#define BILEVEL_BO_SERIALIZE_HPP

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bilevel_bo/bilevel.hpp"
#include "bilevel_bo/space.hpp"

namespace bbo {

using Json = nlohmann::ordered_json;

inline constexpr const char* kStudyFormat = "bilevel-bo/study/1";

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- JSON -------------------------------------------------------------------

inline Json to_json(const Atom& a) {
  if (const auto* d = std::get_if<double>(&a)) return *d;
  return std::get<std::string>(a);
}

inline Atom atom_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw FormatError("parameter value must be a number or string");
}

inline Json real_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline double real_from_json(const Json& j, double null_value) {
  if (j.is_null()) return null_value;
  if (!j.is_number()) throw FormatError("expected a number");
  return j.get<double>();
}

inline Json to_json(const SearchSpace& space, const Configuration& config) {
  Json j = Json::object();
  for (const auto& p : space.params())
    if (config.has(p.name)) j[p.name] = to_json(config.at(p.name));
  return j;
}

inline Configuration configuration_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("configuration must be an object");
  Configuration c;
  for (const auto& [k, v] : j.items()) c.set(k, atom_from_json(v));
  return c;
}

inline Json to_json(const SearchSpace& space) {
  Json arr = Json::array();
  for (const auto& p : space.params()) {
    Json j;
    j["name"] = p.name;
    j["kind"] = std::string(to_string(p.kind));
    if (p.is_continuous()) {
      j["low"] = p.low;
      j["high"] = p.high;
    } else {
      j["choices"] = Json::array();
      for (const auto& c : p.choices) j["choices"].push_back(to_json(c));
    }
    j["level"] = std::string(to_string(p.level));
    arr.push_back(std::move(j));
  }
  return arr;
}

inline ParamKind param_kind_from_string(const std::string& s) {
  if (s == "uniform") return ParamKind::uniform;
  if (s == "log-uniform") return ParamKind::log_uniform;
  if (s == "categorical") return ParamKind::categorical;
  throw FormatError("unknown parameter kind '" + s + "'");
}

inline Level level_from_string(const std::string& s) {
  if (s == "inner") return Level::inner;
  if (s == "outer") return Level::outer;
  throw FormatError("unknown level '" + s + "' (expected inner or outer)");
}

inline SearchSpace space_from_json(const Json& arr) {
  if (!arr.is_array()) throw FormatError("space must be an array");
  std::vector<ParamSpec> params;
  for (const auto& j : arr) {
    ParamSpec p;
    p.name = j.at("name").get<std::string>();
    p.kind = param_kind_from_string(j.at("kind").get<std::string>());
    if (p.is_continuous()) {
      p.low = j.at("low").get<double>();
      p.high = j.at("high").get<double>();
    } else {
      for (const auto& c : j.at("choices")) p.choices.push_back(atom_from_json(c));
    }
    p.level = level_from_string(j.at("level").get<std::string>());
    params.push_back(std::move(p));
  }
  return SearchSpace(std::move(params));
}

inline Json to_json(const AcquisitionKind& a) {
  Json j;
  j["kind"] = a.variant == AcquisitionVariant::ei ? "ei" : "ucb";
  if (a.variant == AcquisitionVariant::ucb) j["kappa"] = a.kappa;
  return j;
}

inline AcquisitionKind acquisition_from_json(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "ei") return AcquisitionKind::ei();
  if (kind == "ucb") return AcquisitionKind::ucb(j.value("kappa", 2.0));
  throw FormatError("unknown acquisition '" + kind + "'");
}

inline StudyMode study_mode_from_string(const std::string& s) {
  if (s == "bilevel") return StudyMode::bilevel;
  if (s == "single-level") return StudyMode::single_level;
  if (s == "random") return StudyMode::random;
  throw FormatError("unknown study mode '" + s + "'");
}

inline Json to_json(const StudyConfig& c) {
  Json j;
  j["mode"] = std::string(to_string(c.mode));
  j["outer_budget"] = c.outer_budget;
  j["inner_budget"] = c.inner_budget;
  j["init_outer"] = c.init_outer;
  j["init_inner"] = c.init_inner;
  j["acq_inner"] = to_json(c.acq_inner);
  j["acq_outer"] = to_json(c.acq_outer);
  j["candidates"] = c.candidates;
  j["seed"] = c.seed;
  return j;
}

inline StudyConfig study_config_from_json(const Json& j) {
  StudyConfig c;
  c.mode = study_mode_from_string(j.at("mode").get<std::string>());
  c.outer_budget = j.at("outer_budget").get<int>();
  c.inner_budget = j.at("inner_budget").get<int>();
  c.init_outer = j.at("init_outer").get<int>();
  c.init_inner = j.at("init_inner").get<int>();
  c.acq_inner = acquisition_from_json(j.at("acq_inner"));
  c.acq_outer = acquisition_from_json(j.at("acq_outer"));
  c.candidates = j.at("candidates").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

inline Json to_json(const SearchSpace& space, const TrialRecord& t) {
  Json j;
  j["outer_index"] = t.outer_index;
  j["inner_index"] = t.inner_index;
  j["config"] = to_json(space, t.config);
  j["train_loss"] = real_or_null(t.train_loss);
  j["val_metric"] = real_or_null(t.val_metric);
  j["status"] = t.ok() ? "ok" : "failed";
  j["wall_time"] = t.wall_time;
  if (!t.ok()) j["message"] = t.message;
  return j;
}

inline TrialRecord trial_from_json(const Json& j) {
  TrialRecord t;
  t.outer_index = j.at("outer_index").get<int>();
  t.inner_index = j.at("inner_index").get<int>();
  t.config = configuration_from_json(j.at("config"));
  const auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "failed") throw FormatError("unknown trial status '" + status + "'");
  t.status = status == "ok" ? TrialStatus::ok : TrialStatus::failed;
  t.train_loss = real_from_json(j.at("train_loss"), std::numeric_limits<double>::quiet_NaN());
  t.val_metric = real_from_json(j.at("val_metric"), std::numeric_limits<double>::quiet_NaN());
  t.wall_time = j.at("wall_time").get<double>();
  t.message = j.value("message", std::string());
  return t;
}

/// Serialized study: space and config echo, every trial, outer GP
/// observations, incumbent and the cumulative-best series.
inline Json study_to_json(const SearchSpace& space, const StudyConfig& cfg, const std::string& objective,
                          const StudyResult& r) {
  Json j;
  j["format"] = kStudyFormat;
  j["objective"] = objective;
  j["space"] = to_json(space);
  j["study"] = to_json(cfg);
  j["trials"] = Json::array();
  for (const auto& t : r.trials) j["trials"].push_back(to_json(space, t));
  j["outer_observations"] = Json::array();
  for (const auto& o : r.outer_observations)
    j["outer_observations"].push_back(Json{{"outer_index", o.outer_index}, {"trial", o.trial}, {"value", o.value}});
  j["best_config"] = to_json(space, r.best_config);
  j["best_val"] = real_or_null(r.best_val);
  j["cumulative_best"] = Json::array();
  for (double v : r.cumulative_best) j["cumulative_best"].push_back(real_or_null(v));
  return j;
}

struct LoadedStudy {
  std::string objective;
  SearchSpace space;
  StudyConfig config;
  StudyResult result;
};

inline LoadedStudy study_from_json(const Json& j) {
  try {
    if (!j.is_object() || j.value("format", std::string()) != kStudyFormat)
      throw FormatError(std::string("not a study document (expected format ") + kStudyFormat + ")");
    LoadedStudy s;
    s.objective = j.value("objective", std::string());
    s.space = space_from_json(j.at("space"));
    s.config = study_config_from_json(j.at("study"));
    for (const auto& t : j.at("trials")) s.result.trials.push_back(trial_from_json(t));
    for (const auto& o : j.at("outer_observations"))
      s.result.outer_observations.push_back(
          {o.at("outer_index").get<int>(), o.at("trial").get<std::size_t>(), o.at("value").get<double>()});
    s.result.best_config = configuration_from_json(j.at("best_config"));
    s.result.best_val = real_from_json(j.at("best_val"), -std::numeric_limits<double>::infinity());
    for (const auto& v : j.at("cumulative_best"))
      s.result.cumulative_best.push_back(real_from_json(v, -std::numeric_limits<double>::infinity()));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed study document: ") + e.what());
  }
}

// ---- CSV --------------------------------------------------------------------

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string trials_csv_header(const SearchSpace& space) {
  std::string h = "outer_index,inner_index";
  for (const auto& p : space.params()) h += "," + csv_field(p.name);
  return h + ",train_loss,val_metric,status,wall_time";
}

/// Fixed columns: outer_index,inner_index,<params in space order>,
/// train_loss,val_metric,status,wall_time. Reals use the shortest
/// round-trip representation.
inline void write_trials_csv(std::ostream& os, const SearchSpace& space, const std::vector<TrialRecord>& trials) {
  os << trials_csv_header(space) << '\n';
  for (const auto& t : trials) {
    os << t.outer_index << ',' << t.inner_index;
    for (const auto& p : space.params()) os << ',' << (t.config.has(p.name) ? csv_field(to_string(t.config.at(p.name))) : "");
    os << ',' << format_double(t.train_loss) << ',' << format_double(t.val_metric) << ',' << (t.ok() ? "ok" : "failed")
       << ',' << format_double(t.wall_time) << '\n';
  }
}

inline std::vector<TrialRecord> read_trials_csv(std::istream& is, const SearchSpace& space) {
  std::string line;
  if (!std::getline(is, line) || line != trials_csv_header(space)) throw FormatError("trials CSV header mismatch");
  std::vector<TrialRecord> out;
  std::size_t lineno = 1;
  auto number = [&](const std::string& s) {
    auto v = parse_double(s);
    if (!v) throw FormatError("line " + std::to_string(lineno) + ": bad number '" + s + "'");
    return *v;
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::size_t np = space.params().size();
    if (f.size() != np + 6) throw FormatError("line " + std::to_string(lineno) + ": wrong field count");
    TrialRecord t;
    t.outer_index = static_cast<int>(number(f[0]));
    t.inner_index = static_cast<int>(number(f[1]));
    for (std::size_t i = 0; i < np; ++i) {
      const auto& p = space.params()[i];
      const auto& s = f[2 + i];
      if (s.empty()) continue;
      if (p.is_continuous()) {
        t.config.set(p.name, number(s));
        continue;
      }
      auto it = std::find_if(p.choices.begin(), p.choices.end(), [&](const Atom& a) { return to_string(a) == s; });
      if (it == p.choices.end()) throw FormatError("line " + std::to_string(lineno) + ": unknown choice '" + s + "'");
      t.config.set(p.name, *it);
    }
    t.train_loss = number(f[np + 2]);
    t.val_metric = number(f[np + 3]);
    if (f[np + 4] != "ok" && f[np + 4] != "failed") throw FormatError("line " + std::to_string(lineno) + ": bad status");
    t.status = f[np + 4] == "ok" ? TrialStatus::ok : TrialStatus::failed;
    t.wall_time = number(f[np + 5]);
    out.push_back(std::move(t));
  }
  return out;
}

inline void write_cumulative_csv(std::ostream& os, const std::vector<double>& series) {
  os << "evaluation_index,value\n";
  for (std::size_t i = 0; i < series.size(); ++i) os << i << ',' << format_double(series[i]) << '\n';
}

}  // namespace bbo

#endif  // BILEVEL_BO_SERIALIZE_HPP
