// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_REPORT_HPP
#define BILEVEL_BO_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bilevel_bo/bilevel.hpp"
#include "bilevel_bo/compare.hpp"
#include "bilevel_bo/experiment.hpp"
#include "bilevel_bo/serialize.hpp"

namespace bbo {

struct ReferenceCheck {
  std::string label;
  double avg = 0.0;
  std::optional<double> computed;  // empty for the baseline row
  std::optional<double> printed;
  bool matches = true;             // printed == computed at two decimals
};

inline std::vector<ReferenceCheck> check_reference(const ReferenceTable& table) {
  const auto base = std::find_if(table.rows.begin(), table.rows.end(),
                                 [&](const ReferenceRow& r) { return r.label == table.baseline; });
  if (base == table.rows.end()) throw std::invalid_argument("reference baseline row missing");
  std::vector<ReferenceCheck> out;
  for (const auto& r : table.rows) {
    ReferenceCheck c{r.label, r.avg, {}, r.printed_rate, true};
    if (r.label != table.baseline) {
      c.computed = improvement_rate(r.avg, base->avg);
      if (r.printed_rate) c.matches = format_percent(*c.computed) == format_percent(*r.printed_rate);
    }
    out.push_back(std::move(c));
  }
  return out;
}

namespace detail {

inline std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "failed";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], r[i].size());
    }
  std::ostringstream os;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    for (std::size_t i = 0; i < r.size(); ++i) {
      os << r[i];
      if (i + 1 < r.size()) os << std::string(width[i] - r[i].size() + 2, ' ');
    }
    os << '\n';
    if (k == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  return os.str();
}

/// Index of the best finite entry (max or min), if any.
inline std::optional<std::size_t> best_index(const std::vector<double>& v, bool maximize) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) continue;
    if (!best || (maximize ? v[i] > v[*best] : v[i] < v[*best])) best = i;
  }
  return best;
}

}  // namespace detail

/// Metric table: one row per pairing, per-objective median best_val, AVG and
/// improvement rate vs the baseline row.
inline void write_comparison_csv(std::ostream& os, const CompareResult& r) {
  os << "method";
  for (const auto& o : r.objectives) os << ',' << csv_field(o);
  os << ",AVG,imp_rate_percent\n";
  for (const auto& row : r.rows) {
    os << csv_field(row.label);
    for (double v : row.median_best_val) os << ',' << format_double(v);
    os << ',' << format_double(row.avg_best_val) << ',' << (row.improvement ? format_percent(*row.improvement) : "") << '\n';
  }
}

inline void write_loss_csv(std::ostream& os, const CompareResult& r) {
  os << "method";
  for (const auto& o : r.objectives) os << ',' << csv_field(o);
  os << ",AVG\n";
  for (const auto& row : r.rows) {
    os << csv_field(row.label);
    for (double v : row.median_final_loss) os << ',' << format_double(v);
    os << ',' << format_double(row.avg_final_loss) << '\n';
  }
}

/// Median cumulative-best series per (objective, pairing).
inline void write_series_csv(std::ostream& os, const CompareResult& r) {
  os << "objective,method,evaluation_index,median_cumulative_best\n";
  for (std::size_t o = 0; o < r.objectives.size(); ++o)
    for (const auto& row : r.rows) {
      const auto& s = row.median_series[o];
      for (std::size_t k = 0; k < s.size(); ++k)
        os << csv_field(r.objectives[o]) << ',' << csv_field(row.label) << ',' << k << ',' << format_double(s[k]) << '\n';
    }
}

/// Aligned-text rendering of both tables; '*' marks the best cell per column.
inline std::string render_comparison(const CompareResult& r, const std::optional<ReferenceTable>& reference = {},
                                     std::size_t seeds = 0) {
  const std::size_t n_obj = r.objectives.size();
  std::ostringstream os;

  auto marked = [](const std::string& s, bool best) { return best ? s + "*" : s; };
  auto column = [&](auto getter) {
    std::vector<double> v;
    for (const auto& row : r.rows) v.push_back(getter(row));
    return v;
  };

  {
    std::vector<std::vector<std::string>> t;
    std::vector<std::string> header{"Method (In-Out)"};
    for (const auto& o : r.objectives) header.push_back(o);
    header.push_back("AVG");
    header.push_back("Imp. Rate (%)");
    t.push_back(header);
    std::vector<std::optional<std::size_t>> best;
    for (std::size_t o = 0; o < n_obj; ++o)
      best.push_back(detail::best_index(column([&](const CompareRow& row) { return row.median_best_val[o]; }), true));
    const auto best_avg = detail::best_index(column([](const CompareRow& row) { return row.avg_best_val; }), true);
    const auto best_imp = detail::best_index(column([](const CompareRow& row) {
      return row.improvement ? *row.improvement : std::numeric_limits<double>::quiet_NaN();
    }), true);
    for (std::size_t p = 0; p < r.rows.size(); ++p) {
      const auto& row = r.rows[p];
      std::vector<std::string> line{row.label};
      for (std::size_t o = 0; o < n_obj; ++o) line.push_back(marked(detail::fixed(row.median_best_val[o]), best[o] == p));
      line.push_back(marked(detail::fixed(row.avg_best_val), best_avg == p));
      line.push_back(row.improvement ? marked(format_percent(*row.improvement), best_imp == p) : "--");
      t.push_back(std::move(line));
    }
    os << "Median best validation metric";
    if (seeds) os << " over " << seeds << " seed(s)";
    os << " (baseline: " << r.rows[r.baseline].label << ")\n\n" << detail::aligned(t) << '\n';
  }

  {
    std::vector<std::vector<std::string>> t;
    std::vector<std::string> header{"Method (In-Out)"};
    for (const auto& o : r.objectives) header.push_back(o);
    header.push_back("AVG");
    t.push_back(header);
    std::vector<std::optional<std::size_t>> best;
    for (std::size_t o = 0; o < n_obj; ++o)
      best.push_back(detail::best_index(column([&](const CompareRow& row) { return row.median_final_loss[o]; }), false));
    const auto best_avg = detail::best_index(column([](const CompareRow& row) { return row.avg_final_loss; }), false);
    for (std::size_t p = 0; p < r.rows.size(); ++p) {
      const auto& row = r.rows[p];
      std::vector<std::string> line{row.label};
      for (std::size_t o = 0; o < n_obj; ++o) line.push_back(marked(detail::fixed(row.median_final_loss[o]), best[o] == p));
      line.push_back(marked(detail::fixed(row.avg_final_loss), best_avg == p));
      t.push_back(std::move(line));
    }
    os << "Median training loss of the incumbent\n\n" << detail::aligned(t) << '\n';
  }

  os << "* best in column.\n";

  std::size_t failed = 0;
  for (const auto& c : r.cells) failed += c.result ? 0 : 1;
  if (failed) os << failed << " of " << r.cells.size() << " studies failed; failed cells are excluded from medians.\n";

  if (reference) {
    const auto checks = check_reference(*reference);
    std::vector<std::vector<std::string>> t{{"Method", "AVG", "Printed Imp. Rate (%)", "Computed Imp. Rate (%)"}};
    std::vector<std::string> notes;
    for (const auto& c : checks) {
      std::string computed = c.computed ? format_percent(*c.computed) : "--";
      if (!c.matches) {
        notes.push_back("[" + std::to_string(notes.size() + 1) + "] " + c.label + ": printed " +
                        format_percent(*c.printed) + " but 100 * (" + detail::fixed(c.avg, 2) + " - " +
                        detail::fixed(std::find_if(checks.begin(), checks.end(),
                                                   [&](const ReferenceCheck& x) { return x.label == reference->baseline; })
                                          ->avg,
                                      2) +
                        ") / baseline = " + computed + "; the computed value is reported.");
        computed += " [" + std::to_string(notes.size()) + "]";
      }
      t.push_back({c.label, detail::fixed(c.avg, 2), c.printed ? format_percent(*c.printed) : "--", computed});
    }
    os << "\nReference averages, improvement rates recomputed against " << reference->baseline << "\n\n"
       << detail::aligned(t);
    if (!notes.empty()) {
      os << '\n';
      for (const auto& n : notes) os << n << '\n';
    }
  }
  return os.str();
}

}  // namespace bbo

#endif  // BILEVEL_BO_REPORT_HPP
