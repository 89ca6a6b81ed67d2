// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_CLI_HPP
#define BILEVEL_BO_CLI_HPP

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "bilevel_bo/bilevel.hpp"
#include "bilevel_bo/compare.hpp"
#include "bilevel_bo/experiment.hpp"
#include "bilevel_bo/external.hpp"
#include "bilevel_bo/report.hpp"
#include "bilevel_bo/serialize.hpp"

namespace bbo::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInputError = 2, kStudyFailure = 3 };

struct Options {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
};

/// --out wins over BILEVEL_BO_OUT, which wins over the config file.
inline fs::path output_dir(const Options& opts, const std::string& from_config) {
  if (opts.out_dir) return *opts.out_dir;
  if (const char* env = std::getenv("BILEVEL_BO_OUT"); env && *env) return env;
  return from_config;
}

/// Write via a temporary sibling and rename, so readers never see partial files.
inline void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_study_outputs(const fs::path& dir, const SearchSpace& space, const StudyConfig& cfg,
                                const std::string& objective, const StudyResult& r) {
  write_file(dir / "study.json", study_to_json(space, cfg, objective, r).dump(2) + "\n");
  std::ostringstream trials, cumulative;
  write_trials_csv(trials, space, r.trials);
  write_cumulative_csv(cumulative, r.cumulative_best);
  write_file(dir / "trials.csv", trials.str());
  write_file(dir / "cumulative_best.csv", cumulative.str());
}

inline std::string config_message(const std::string& path, const ConfigError& e) {
  return path + (e.line() > 0 ? ":" + std::to_string(e.line()) : std::string()) + ": " + e.what();
}

inline int cmd_run(const std::string& config_path, const Options& opts, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config_path);
  } catch (const ConfigError& e) {
    log << config_message(config_path, e) << '\n';
    return kInputError;
  }
  if (!cfg.objective) {
    log << config_path << ": run needs a top-level objective\n";
    return kInputError;
  }
  if (opts.seed) cfg.study.seed = *opts.seed;
  const fs::path dir = output_dir(opts, cfg.output_dir);
  const auto& obj = *cfg.objective;

  try {
    auto objective = make_objective(obj.spec, obj.space, cfg.study.seed);
    const StudyResult r = run_study(*objective, obj.space, cfg.study);
    write_study_outputs(dir, obj.space, cfg.study, obj.label, r);
    log << "best val_metric " << format_double(r.best_val) << " after " << r.trials.size() << " evaluations; wrote "
        << dir.string() << '\n';
    return kOk;
  } catch (const StudyConfigError& e) {
    log << config_path << ": " << e.what() << '\n';
    return kInputError;
  } catch (const StudyFailure& e) {
    const auto& p = e.partial();
    std::ostringstream trials;
    write_trials_csv(trials, obj.space, p.trials);
    write_file(dir / "trials.csv", trials.str());
    Json failed = Json::array();
    for (const auto& t : p.trials) failed.push_back(to_json(obj.space, t));
    write_file(dir / "failure.json", Json{{"error", e.what()}, {"trials", failed}}.dump(2) + "\n");
    log << "study failed: " << e.what() << " (" << p.trials.size() << " trials logged in " << dir.string() << ")\n";
    for (const auto& t : p.trials)
      if (!t.message.empty()) {
        log << "  first error: " << t.message << '\n';
        break;
      }
    return kStudyFailure;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kStudyFailure;
  }
}

inline std::string path_component(const std::string& label) {
  std::string out;
  for (char c : label) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out.empty() ? "_" : out;
}

inline int cmd_compare(const std::string& config_path, const Options& opts, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment(config_path);
  } catch (const ConfigError& e) {
    log << config_message(config_path, e) << '\n';
    return kInputError;
  }
  if (!cfg.compare) {
    log << config_path << ": compare needs a 'compare' section\n";
    return kInputError;
  }
  auto& cmp = *cfg.compare;
  if (opts.seed) cmp.seeds = {*opts.seed};
  const fs::path dir = output_dir(opts, cfg.output_dir);

  std::vector<CompareObjective> objectives;
  for (const auto& o : cmp.objectives) objectives.push_back({o.label, o.space});
  for (std::size_t p = 0; p < cmp.pairings.size(); ++p)
    for (const auto& o : cmp.objectives)
      if (auto errors = validate(cmp.pairings[p].apply(cfg.study), o.space); !errors.empty()) {
        log << config_path << ": pairing '" << cmp.pairings[p].label << "' on '" << o.label << "': " << errors.front()
            << '\n';
        return kInputError;
      }

  const ObjectiveFactory factory = [&](const CellKey& key) {
    const auto& o = cmp.objectives[key.objective];
    return make_objective(o.spec, o.space, key.seed);
  };

  CompareResult r;
  try {
    r = compare_configs(objectives, cmp.pairings, cmp.baseline, cmp.seeds, cfg.study, factory, opts.jobs);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kStudyFailure;
  }

  std::size_t ok = 0;
  for (const auto& c : r.cells) {
    const fs::path cell_dir = dir / "cells" / path_component(r.objectives[c.key.objective]) /
                              path_component(r.pairings[c.key.pairing]) / ("seed_" + std::to_string(c.key.seed));
    if (c.result) {
      ++ok;
      write_study_outputs(cell_dir, objectives[c.key.objective].space, c.config, r.objectives[c.key.objective], *c.result);
    } else {
      write_file(cell_dir / "failure.json", Json{{"error", c.error}}.dump(2) + "\n");
    }
  }

  std::ostringstream metric, loss, series;
  write_comparison_csv(metric, r);
  write_loss_csv(loss, r);
  write_series_csv(series, r);
  const std::string text = render_comparison(r, cmp.reference, cmp.seeds.size());
  write_file(dir / "comparison.csv", metric.str());
  write_file(dir / "loss.csv", loss.str());
  write_file(dir / "series.csv", series.str());
  write_file(dir / "comparison.txt", text);
  log << text;
  if (ok == 0) {
    log << "every study failed\n";
    return kStudyFailure;
  }
  return kOk;
}

/// Plot-ready series from a saved study: cumulative best (recomputed from the
/// trials) and the per-trial scatter.
inline int cmd_report(const std::string& study_path, const Options& opts, std::ostream& log) {
  std::ifstream is(study_path);
  if (!is) {
    log << study_path << ": cannot read\n";
    return kInputError;
  }
  LoadedStudy s;
  try {
    s = study_from_json(Json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    log << study_path << ": malformed JSON: " << e.what() << '\n';
    return kInputError;
  } catch (const FormatError& e) {
    log << study_path << ": " << e.what() << '\n';
    return kInputError;
  }
  if (s.result.trials.empty()) {
    log << study_path << ": study has no trials\n";
    return kInputError;
  }
  const fs::path dir = opts.out_dir ? fs::path(*opts.out_dir) : fs::path(study_path).parent_path();

  const auto series = cumulative_best(s.result.trials);
  std::ostringstream cumulative, scatter;
  write_cumulative_csv(cumulative, series);
  scatter << "evaluation_index,outer_index,inner_index,train_loss,val_metric,status\n";
  for (std::size_t i = 0; i < s.result.trials.size(); ++i) {
    const auto& t = s.result.trials[i];
    scatter << i << ',' << t.outer_index << ',' << t.inner_index << ',' << format_double(t.train_loss) << ','
            << format_double(t.val_metric) << ',' << (t.ok() ? "ok" : "failed") << '\n';
  }
  write_file(dir / "report_cumulative_best.csv", cumulative.str());
  write_file(dir / "report_scatter.csv", scatter.str());
  log << "wrote " << (dir / "report_cumulative_best.csv").string() << " and " << (dir / "report_scatter.csv").string()
      << '\n';
  return kOk;
}

}  // namespace bbo::cli

#endif  // BILEVEL_BO_CLI_HPP
