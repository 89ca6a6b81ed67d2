// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_BILEVEL_HPP
#define BILEVEL_BO_BILEVEL_HPP

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bilevel_bo/acquisition.hpp"
#include "bilevel_bo/objective.hpp"
#include "bilevel_bo/random.hpp"
#include "bilevel_bo/space.hpp"
#include "bilevel_bo/surrogate.hpp"

namespace bbo {

enum class StudyMode { bilevel, single_level, random };

inline std::string_view to_string(StudyMode m) {
  switch (m) {
    case StudyMode::bilevel: return "bilevel";
    case StudyMode::single_level: return "single-level";
    case StudyMode::random: return "random";
  }
  return "?";
}

struct StudyConfig {
  StudyMode mode = StudyMode::bilevel;
  int outer_budget = 50;
  int inner_budget = 8;
  int init_outer = 5;
  int init_inner = 3;
  AcquisitionKind acq_inner = AcquisitionKind::ei();
  AcquisitionKind acq_outer = AcquisitionKind::ei();
  std::size_t candidates = 1024;
  std::uint64_t seed = 0;
  FitOptions gp;

  /// Objective evaluations the study will make.
  int total_evaluations() const { return mode == StudyMode::bilevel ? outer_budget * inner_budget : outer_budget; }
};

class StudyConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Returns human-readable problems; empty when the config is usable with `space`.
inline std::vector<std::string> validate(const StudyConfig& cfg, const SearchSpace& space) {
  std::vector<std::string> errors;
  if (cfg.outer_budget < 1) errors.emplace_back("outer_budget must be positive");
  if (cfg.init_outer < 1) errors.emplace_back("init_outer must be positive");
  if (cfg.init_outer > cfg.outer_budget) errors.emplace_back("init_outer must not exceed outer_budget");
  if (cfg.candidates == 0) errors.emplace_back("candidates must be positive");
  for (const auto* acq : {&cfg.acq_inner, &cfg.acq_outer})
    if (acq->variant == AcquisitionVariant::ucb && !(acq->kappa > 0.0)) errors.emplace_back("UCB kappa must be positive");
  if (cfg.mode == StudyMode::bilevel) {
    if (cfg.inner_budget < 1) errors.emplace_back("inner_budget must be positive");
    if (cfg.init_inner < 1) errors.emplace_back("init_inner must be positive");
    if (cfg.init_inner > cfg.inner_budget) errors.emplace_back("init_inner must not exceed inner_budget");
  }
  for (const auto& e : validate(space, cfg.mode == StudyMode::bilevel))
    errors.push_back(e.param.empty() ? e.message : e.param + ": " + e.message);
  return errors;
}

enum class TrialStatus { ok, failed };

struct TrialRecord {
  int outer_index = 0;
  int inner_index = -1;  // -1 outside bilevel mode
  Configuration config;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double val_metric = std::numeric_limits<double>::quiet_NaN();
  TrialStatus status = TrialStatus::failed;
  double wall_time = 0.0;
  std::string message;  // failure reason; empty when ok

  bool ok() const { return status == TrialStatus::ok; }
};

/// One outer-level GP observation: the val_metric of the inner argmin trial.
struct OuterObservation {
  int outer_index = 0;
  std::size_t trial = 0;  // index into StudyResult::trials
  double value = 0.0;
};

struct StudyResult {
  std::vector<TrialRecord> trials;
  Configuration best_config;
  double best_val = -std::numeric_limits<double>::infinity();
  std::vector<double> cumulative_best;
  std::vector<OuterObservation> outer_observations;  // bilevel mode only

  std::optional<std::size_t> best_trial() const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < trials.size(); ++i)
      if (trials[i].ok() && (!best || trials[i].val_metric > trials[*best].val_metric)) best = i;
    return best;
  }
};

class StudyFailure : public std::runtime_error {
 public:
  StudyFailure(const std::string& what, StudyResult partial) : std::runtime_error(what), partial_(std::move(partial)) {}
  const StudyResult& partial() const { return partial_; }

 private:
  StudyResult partial_;
};

/// Running maximum of val_metric over ok trials in call order. Entries before
/// the first ok trial are -inf.
inline std::vector<double> cumulative_best(const std::vector<TrialRecord>& trials) {
  std::vector<double> out;
  out.reserve(trials.size());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& t : trials) {
    if (t.ok()) best = std::max(best, t.val_metric);
    out.push_back(best);
  }
  return out;
}

inline std::vector<double> cumulative_best(const std::vector<double>& values) {
  std::vector<double> out;
  double best = -std::numeric_limits<double>::infinity();
  for (double v : values) out.push_back(best = std::max(best, v));
  return out;
}

namespace detail {

inline TrialRecord evaluate_trial(Objective& objective, Configuration config, int outer_index, int inner_index) {
  TrialRecord r;
  r.outer_index = outer_index;
  r.inner_index = inner_index;
  r.config = std::move(config);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Evaluation e = objective.evaluate(r.config);
    if (std::isfinite(e.train_loss) && std::isfinite(e.val_metric)) {
      r.train_loss = e.train_loss;
      r.val_metric = e.val_metric;
      r.status = TrialStatus::ok;
    } else {
      r.message = "non-finite objective value";
    }
  } catch (const std::exception& ex) {
    r.message = ex.what();
  }
  if (objective.timed())
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Maximizing BO step: GP over `xs`/`ys`, propose with `acq`; random draw
/// when there is no data or the GP cannot be fitted.
inline Configuration next_point(const SearchSpace& space, LevelFilter level, const std::vector<Eigen::VectorXd>& xs,
                                const std::vector<double>& ys, bool initial, const AcquisitionKind& acq,
                                const StudyConfig& cfg, Rng& rng) {
  if (initial || xs.empty()) return sample(space, level, rng);
  const std::uint64_t fit_seed = rng.derive_seed();
  try {
    const GpModel model = fit(xs, ys, fit_seed, cfg.gp);
    const Incumbent inc{*std::max_element(ys.begin(), ys.end())};
    return propose(model, space, level, acq, inc, cfg.candidates, rng);
  } catch (const SurrogateError&) {
    return sample(space, level, rng);
  }
}

}  // namespace detail

struct InnerResult {
  std::optional<Configuration> phi_star;  // empty when every inner evaluation failed
  std::optional<std::size_t> argmin;      // index into records
  std::vector<TrialRecord> records;
};

/// Inner loop for a fixed outer assignment `theta`: BO over the inner params
/// minimizing train_loss (GP fit on -train_loss), with a fresh GP.
inline InnerResult run_inner(const Configuration& theta, Objective& objective, const SearchSpace& space,
                             const StudyConfig& cfg, Rng& rng, int outer_index = 0) {
  for (const auto* p : space.filtered(LevelFilter::outer))
    if (!theta.has(p->name)) throw StudyConfigError("theta does not assign outer parameter '" + p->name + "'");

  InnerResult out;
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  for (int k = 0; k < cfg.inner_budget; ++k) {
    Configuration phi =
        detail::next_point(space, LevelFilter::inner, xs, ys, k < cfg.init_inner, cfg.acq_inner, cfg, rng);
    TrialRecord r = detail::evaluate_trial(objective, theta.merged(phi), outer_index, k);
    if (r.ok()) {
      xs.push_back(encode(space, phi, LevelFilter::inner));
      ys.push_back(-r.train_loss);
      if (!out.argmin || r.train_loss < out.records[*out.argmin].train_loss) {
        out.argmin = out.records.size();
        out.phi_star = std::move(phi);
      }
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

inline StudyResult finalize(StudyResult result) {
  result.cumulative_best = cumulative_best(result.trials);
  const auto best = result.best_trial();
  if (!best) throw StudyFailure("study produced no successful trials", std::move(result));
  result.best_config = result.trials[*best].config;
  result.best_val = result.cumulative_best.back();
  return result;
}

/// Run one study. Throws StudyConfigError for invalid input and StudyFailure
/// (carrying every record) when no trial succeeds.
inline StudyResult run_study(Objective& objective, const SearchSpace& space, const StudyConfig& cfg) {
  if (auto errors = validate(cfg, space); !errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    throw StudyConfigError(msg);
  }

  Rng rng(cfg.seed);
  StudyResult result;
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;

  switch (cfg.mode) {
    case StudyMode::bilevel:
      for (int i = 0; i < cfg.outer_budget; ++i) {
        Configuration theta =
            detail::next_point(space, LevelFilter::outer, xs, ys, i < cfg.init_outer, cfg.acq_outer, cfg, rng);
        InnerResult inner = run_inner(theta, objective, space, cfg, rng, i);
        const std::size_t base = result.trials.size();
        if (inner.argmin) {
          const double value = inner.records[*inner.argmin].val_metric;
          xs.push_back(encode(space, theta, LevelFilter::outer));
          ys.push_back(value);
          result.outer_observations.push_back({i, base + *inner.argmin, value});
        }
        for (auto& r : inner.records) result.trials.push_back(std::move(r));
      }
      break;

    case StudyMode::single_level:
      for (int i = 0; i < cfg.outer_budget; ++i) {
        Configuration c =
            detail::next_point(space, LevelFilter::all, xs, ys, i < cfg.init_outer, cfg.acq_outer, cfg, rng);
        TrialRecord r = detail::evaluate_trial(objective, c, i, -1);
        if (r.ok()) {
          xs.push_back(encode(space, c, LevelFilter::all));
          ys.push_back(r.val_metric);
        }
        result.trials.push_back(std::move(r));
      }
      break;

    case StudyMode::random:
      for (int i = 0; i < cfg.outer_budget; ++i)
        result.trials.push_back(detail::evaluate_trial(objective, sample(space, LevelFilter::all, rng), i, -1));
      break;
  }
  return finalize(std::move(result));
}

/// Percent gain of `avg_method` over `avg_baseline`, unrounded.
inline double improvement_rate(double avg_method, double avg_baseline) {
  if (avg_baseline == 0.0) throw std::invalid_argument("improvement_rate: baseline average is zero");
  return 100.0 * (avg_method - avg_baseline) / avg_baseline;
}

/// Two-decimal display, rounding half up.
inline std::string format_percent(double value) {
  const double rounded = std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", rounded == 0.0 ? 0.0 : rounded);
  return buf;
}

}  // namespace bbo

#endif  // BILEVEL_BO_BILEVEL_HPP
