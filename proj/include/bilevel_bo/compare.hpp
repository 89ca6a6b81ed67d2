// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_COMPARE_HPP
#define BILEVEL_BO_COMPARE_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bilevel_bo/bilevel.hpp"

namespace bbo {

/// One row of a comparison: an acquisition pairing or a baseline.
struct Pairing {
  std::string label;
  StudyMode mode = StudyMode::bilevel;
  AcquisitionKind inner = AcquisitionKind::ei();
  AcquisitionKind outer = AcquisitionKind::ei();
  /// Evaluation budget for single-level/random rows. Unset: random rows match
  /// the bilevel total (outer x inner), single-level rows use outer_budget.
  std::optional<int> budget;

  static Pairing bilevel(AcquisitionKind inner, AcquisitionKind outer) {
    return {std::string(inner.name()) + "-" + std::string(outer.name()), StudyMode::bilevel, inner, outer, {}};
  }
  static Pairing random_search(std::string label = "random") {
    return {std::move(label), StudyMode::random, AcquisitionKind::ei(), AcquisitionKind::ei(), {}};
  }
  static Pairing single_level(AcquisitionKind acq, std::string label = "single-level") {
    return {std::move(label), StudyMode::single_level, acq, acq, {}};
  }

  StudyConfig apply(StudyConfig cfg) const {
    const int total = cfg.outer_budget * cfg.inner_budget;
    const int base_outer = cfg.outer_budget;
    cfg.mode = mode;
    cfg.acq_inner = inner;
    cfg.acq_outer = outer;
    if (mode == StudyMode::random) cfg.outer_budget = budget.value_or(total);
    if (mode == StudyMode::single_level) cfg.outer_budget = budget.value_or(base_outer);
    cfg.init_outer = std::min(cfg.init_outer, cfg.outer_budget);
    return cfg;
  }
};

/// The four in-out pairings: EI-EI, UCB-UCB, EI-UCB, UCB-EI.
inline std::vector<Pairing> standard_pairings(double kappa = 2.0) {
  const auto ei = AcquisitionKind::ei(), ucb = AcquisitionKind::ucb(kappa);
  auto a = Pairing::bilevel(ei, ei), b = Pairing::bilevel(ucb, ucb);
  a.label = "EI";
  b.label = "UCB";
  return {a, b, Pairing::bilevel(ei, ucb), Pairing::bilevel(ucb, ei)};
}

struct CompareObjective {
  std::string label;
  SearchSpace space;
};

struct CellKey {
  std::size_t objective = 0;
  std::size_t pairing = 0;
  std::uint64_t seed = 0;
};

using ObjectiveFactory = std::function<std::unique_ptr<Objective>(const CellKey&)>;

struct CompareCell {
  CellKey key;
  StudyConfig config;
  std::optional<StudyResult> result;
  std::string error;
};

/// Per (pairing, objective) medians across seeds. NaN marks an all-failed cell.
struct CompareRow {
  std::string label;
  std::vector<double> median_best_val;
  std::vector<double> median_final_loss;
  double avg_best_val = 0.0;
  double avg_final_loss = 0.0;
  std::optional<double> improvement;  // vs baseline; empty for the baseline row
  std::vector<std::vector<double>> median_series;  // per objective
};

struct CompareResult {
  std::vector<std::string> objectives;
  std::vector<std::string> pairings;
  std::size_t baseline = 0;
  std::vector<CompareCell> cells;  // ordered by (objective, pairing, seed index)
  std::vector<CompareRow> rows;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// train_loss of the trial that achieved best_val.
inline double final_train_loss(const StudyResult& r) {
  const auto best = r.best_trial();
  return best ? r.trials[*best].train_loss : std::numeric_limits<double>::quiet_NaN();
}

/// Run every (objective, pairing, seed) cell, then aggregate. Cells run on up
/// to `jobs` threads; results are merged in cell order regardless of timing.
inline CompareResult compare_configs(const std::vector<CompareObjective>& objectives, const std::vector<Pairing>& pairings,
                                     std::size_t baseline, const std::vector<std::uint64_t>& seeds,
                                     const StudyConfig& base, const ObjectiveFactory& factory, unsigned jobs = 1) {
  if (objectives.empty()) throw std::invalid_argument("compare: need at least one objective");
  if (pairings.empty()) throw std::invalid_argument("compare: need at least one pairing");
  if (seeds.empty()) throw std::invalid_argument("compare: need at least one seed");
  if (baseline >= pairings.size()) throw std::invalid_argument("compare: baseline index out of range");

  CompareResult out;
  out.baseline = baseline;
  for (const auto& o : objectives) out.objectives.push_back(o.label);
  for (const auto& p : pairings) out.pairings.push_back(p.label);
  for (std::size_t o = 0; o < objectives.size(); ++o)
    for (std::size_t p = 0; p < pairings.size(); ++p)
      for (auto seed : seeds) {
        auto& cell = out.cells.emplace_back();
        cell.key = {o, p, seed};
        cell.config = pairings[p].apply(base);
        cell.config.seed = seed;
      }

  auto run_cell = [&](CompareCell& cell) {
    try {
      auto objective = factory(cell.key);
      cell.result = run_study(*objective, objectives[cell.key.objective].space, cell.config);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  };
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < out.cells.size(); i = next++) run_cell(out.cells[i]);
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(out.cells.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t p = 0; p < pairings.size(); ++p) {
    CompareRow row;
    row.label = pairings[p].label;
    for (std::size_t o = 0; o < objectives.size(); ++o) {
      std::vector<double> best, loss;
      std::vector<std::vector<double>> series;
      for (const auto& c : out.cells) {
        if (c.key.objective != o || c.key.pairing != p || !c.result) continue;
        best.push_back(c.result->best_val);
        loss.push_back(final_train_loss(*c.result));
        series.push_back(c.result->cumulative_best);
      }
      row.median_best_val.push_back(median(best));
      row.median_final_loss.push_back(median(loss));
      std::vector<double> med;
      if (!series.empty()) {
        const auto len = series.front().size();
        for (std::size_t k = 0; k < len; ++k) {
          std::vector<double> col;
          for (const auto& s : series)
            if (k < s.size()) col.push_back(s[k]);
          med.push_back(median(col));
        }
      }
      row.median_series.push_back(std::move(med));
    }
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    row.avg_best_val = mean(row.median_best_val);
    row.avg_final_loss = mean(row.median_final_loss);
    out.rows.push_back(std::move(row));
  }
  const double base_avg = out.rows[baseline].avg_best_val;
  for (std::size_t p = 0; p < out.rows.size(); ++p) {
    if (p == baseline || !std::isfinite(out.rows[p].avg_best_val) || !std::isfinite(base_avg) || base_avg == 0.0) continue;
    out.rows[p].improvement = improvement_rate(out.rows[p].avg_best_val, base_avg);
  }
  return out;
}

}  // namespace bbo

#endif  // BILEVEL_BO_COMPARE_HPP
