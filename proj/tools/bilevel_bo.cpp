// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

// bilevel_bo: run a study, compare acquisition pairings, or export series.
//
//   bilevel_bo run configs/default.yaml --out runs/default
//   bilevel_bo compare configs/compare.yaml --jobs 4
//   bilevel_bo report runs/default/study.json

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bilevel_bo/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bilevel Bayesian optimization with per-level acquisition functions"};
  app.require_subcommand(1);

  bbo::cli::Options opts;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string config_path, study_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "Output directory (overrides config and BILEVEL_BO_OUT)");
    sub->add_option("--seed", seed, "Seed (overrides config)");
    sub->add_option("--jobs", opts.jobs, "Parallel studies in compare mode")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Run one study from a config file");
  run->add_option("config", config_path, "Experiment config (YAML)")->required();
  add_common(run);

  auto* compare = app.add_subcommand("compare", "Compare acquisition pairings and baselines");
  compare->add_option("config", config_path, "Experiment config with a compare section")->required();
  add_common(compare);

  auto* report = app.add_subcommand("report", "Export plot-ready series from study.json");
  report->add_option("study", study_path, "study.json written by run or compare")->required();
  report->add_option("--out", out_dir, "Output directory (default: next to study.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : bbo::cli::kInputError;
  }

  for (auto* sub : {run, compare, report}) {
    if (!sub->parsed()) continue;
    if (sub->count("--out")) opts.out_dir = out_dir;
    if (sub != report && sub->count("--seed")) opts.seed = seed;
  }

  // BILEVEL_BO_LOG=error keeps stdout quiet unless the command fails.
  const char* level = std::getenv("BILEVEL_BO_LOG");
  const bool quiet = level && (std::string(level) == "error" || std::string(level) == "quiet");
  std::ostringstream buffered;
  std::ostream& log = quiet ? static_cast<std::ostream&>(buffered) : std::cerr;

  int rc = bbo::cli::kInputError;
  if (run->parsed()) rc = bbo::cli::cmd_run(config_path, opts, log);
  else if (compare->parsed()) rc = bbo::cli::cmd_compare(config_path, opts, log);
  else if (report->parsed()) rc = bbo::cli::cmd_report(study_path, opts, log);

  if (quiet && rc != 0) std::cerr << buffered.str();
  return rc;
}
