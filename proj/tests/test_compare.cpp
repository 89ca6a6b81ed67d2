// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "bilevel_bo/compare.hpp"
#include "bilevel_bo/report.hpp"
#include "bilevel_bo/serialize.hpp"

namespace bbo {
namespace {

const SearchSpace kLine2 = builtin::default_space("quadratic-bilevel");

StudyConfig base_config() {
  StudyConfig cfg;
  cfg.outer_budget = 4;
  cfg.inner_budget = 3;
  cfg.init_outer = 2;
  cfg.init_inner = 2;
  cfg.candidates = 64;
  return cfg;
}

ObjectiveFactory builtin_factory(const std::vector<std::string>& names) {
  return [names](const CellKey& key) {
    return std::make_unique<BuiltinObjective>(names[key.objective], kLine2);
  };
}

std::string dump(const StudyResult& r) {
  std::ostringstream os;
  write_trials_csv(os, kLine2, r.trials);
  return os.str();
}

TEST(Compare, SingleCellMatchesRunStudy) {
  const auto pairing = Pairing::bilevel(AcquisitionKind::ei(), AcquisitionKind::ucb(2.0));
  const auto r = compare_configs({{"q", kLine2}}, {pairing}, 0, {7}, base_config(), builtin_factory({"quadratic-bilevel"}));
  ASSERT_EQ(r.cells.size(), 1u);
  ASSERT_TRUE(r.cells[0].result);

  BuiltinObjective f("quadratic-bilevel", kLine2);
  auto cfg = pairing.apply(base_config());
  cfg.seed = 7;
  const auto direct = run_study(f, kLine2, cfg);
  EXPECT_EQ(dump(*r.cells[0].result), dump(direct));
  EXPECT_EQ(r.rows[0].median_best_val[0], direct.best_val);
  EXPECT_EQ(r.rows[0].avg_best_val, direct.best_val);
  EXPECT_FALSE(r.rows[0].improvement);
}

TEST(Compare, DuplicatePairingGivesIdenticalRows) {
  const auto p = standard_pairings()[0];
  const auto r = compare_configs({{"q", kLine2}, {"m", kLine2}}, {p, p}, 0, {1, 2, 3}, base_config(),
                                 builtin_factory({"quadratic-bilevel", "misaligned"}));
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].median_best_val, r.rows[1].median_best_val);
  EXPECT_EQ(r.rows[0].median_final_loss, r.rows[1].median_final_loss);
  EXPECT_EQ(r.rows[0].median_series, r.rows[1].median_series);
  ASSERT_TRUE(r.rows[1].improvement);
  EXPECT_EQ(*r.rows[1].improvement, 0.0);
}

TEST(Compare, ConstantFixtureReproducesRate) {
  const std::vector<double> values = {74.80, 76.82};
  const ObjectiveFactory factory = [&](const CellKey& key) -> std::unique_ptr<Objective> {
    const double v = values[key.pairing];
    return std::make_unique<FunctionObjective>([v](const Configuration&) { return Evaluation{0.0, v, {}}; });
  };
  auto baseline = Pairing::random_search("Fine-tune");
  const auto r = compare_configs({{"a", kLine2}, {"b", kLine2}}, {baseline, standard_pairings()[2]}, 0, {0, 1, 2},
                                 base_config(), factory);
  EXPECT_DOUBLE_EQ(r.rows[0].avg_best_val, 74.80);
  EXPECT_DOUBLE_EQ(r.rows[1].avg_best_val, 76.82);
  ASSERT_TRUE(r.rows[1].improvement);
  EXPECT_EQ(format_percent(*r.rows[1].improvement), "2.70");

  std::ostringstream csv;
  write_comparison_csv(csv, r);
  EXPECT_NE(csv.str().find("EI-UCB,76.82,76.82,76.82,2.70"), std::string::npos) << csv.str();
}

TEST(Compare, RandomBaselineBudgetMatchesBilevelTotal) {
  const auto r = compare_configs({{"q", kLine2}}, {Pairing::random_search(), standard_pairings()[0]}, 0, {0},
                                 base_config(), builtin_factory({"quadratic-bilevel"}));
  EXPECT_EQ(r.cells[0].result->trials.size(), 12u);
  EXPECT_EQ(r.cells[1].result->trials.size(), 12u);
}

TEST(Compare, ParallelMatchesSerial) {
  const auto pairings = standard_pairings();
  const std::vector<std::uint64_t> seeds = {0, 1, 2};
  const auto a = compare_configs({{"q", kLine2}}, pairings, 0, seeds, base_config(), builtin_factory({"quadratic-bilevel"}), 1);
  const auto b = compare_configs({{"q", kLine2}}, pairings, 0, seeds, base_config(), builtin_factory({"quadratic-bilevel"}), 3);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_EQ(dump(*a.cells[i].result), dump(*b.cells[i].result));
  EXPECT_EQ(render_comparison(a), render_comparison(b));
}

TEST(Compare, MedianSeriesIsPointwiseMedian) {
  const std::vector<std::uint64_t> seeds = {3, 4, 5};
  const auto r = compare_configs({{"q", kLine2}}, {standard_pairings()[1]}, 0, seeds, base_config(),
                                 builtin_factory({"quadratic-bilevel"}));
  const auto& series = r.rows[0].median_series[0];
  ASSERT_EQ(series.size(), 12u);
  for (std::size_t k = 0; k < series.size(); ++k) {
    std::vector<double> col;
    for (const auto& c : r.cells) col.push_back(c.result->cumulative_best[k]);
    std::sort(col.begin(), col.end());
    EXPECT_EQ(series[k], col[1]);
  }
}

TEST(Compare, FourPairingsPlusRandomOnMisaligned) {
  const SearchSpace space = builtin::default_space("misaligned");
  auto pairings = standard_pairings();
  pairings.push_back(Pairing::random_search());
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
  const auto r = compare_configs({{"misaligned", space}}, pairings, 4, seeds, base_config(),
                                 builtin_factory({"misaligned"}));
  ASSERT_EQ(r.rows.size(), 5u);
  EXPECT_EQ(r.cells.size(), 100u);
  for (const auto& c : r.cells) {
    ASSERT_TRUE(c.result);
    for (std::size_t i = 1; i < c.result->cumulative_best.size(); ++i)
      EXPECT_GE(c.result->cumulative_best[i], c.result->cumulative_best[i - 1]);
  }
  for (std::size_t p = 0; p < 4; ++p) EXPECT_TRUE(r.rows[p].improvement);
  EXPECT_FALSE(r.rows[4].improvement);
}

TEST(Compare, FailedCellsAreReportedNotFatal) {
  const ObjectiveFactory factory = [](const CellKey& key) -> std::unique_ptr<Objective> {
    if (key.seed == 1)
      return std::make_unique<FunctionObjective>([](const Configuration&) -> Evaluation { throw EvaluationError("x"); });
    return std::make_unique<BuiltinObjective>("quadratic-bilevel", kLine2);
  };
  const auto r = compare_configs({{"q", kLine2}}, {standard_pairings()[0]}, 0, {0, 1, 2}, base_config(), factory);
  EXPECT_FALSE(r.cells[1].result);
  EXPECT_FALSE(r.cells[1].error.empty());
  EXPECT_EQ(r.rows[0].median_best_val[0], 0.5 * (r.cells[0].result->best_val + r.cells[2].result->best_val));
  EXPECT_NE(render_comparison(r).find("1 of 3 studies failed"), std::string::npos);
}

TEST(Compare, RejectsBadArguments) {
  const auto f = builtin_factory({"quadratic-bilevel"});
  EXPECT_THROW(compare_configs({}, standard_pairings(), 0, {0}, base_config(), f), std::invalid_argument);
  EXPECT_THROW(compare_configs({{"q", kLine2}}, {}, 0, {0}, base_config(), f), std::invalid_argument);
  EXPECT_THROW(compare_configs({{"q", kLine2}}, standard_pairings(), 0, {}, base_config(), f), std::invalid_argument);
  EXPECT_THROW(compare_configs({{"q", kLine2}}, standard_pairings(), 9, {0}, base_config(), f), std::invalid_argument);
}

ReferenceTable reference_table() {
  return {"Fine-tune",
          {{"Fine-tune", 74.80, {}},
           {"single-level", 75.98, 1.18},
           {"UCB", 75.30, 0.67},
           {"EI", 75.52, 0.96},
           {"UCB-EI", 75.45, 0.87},
           {"EI-UCB", 76.82, 2.70}}};
}

TEST(Reference, RecomputesReferenceRates) {
  std::map<std::string, ReferenceCheck> by_label;
  for (auto& c : check_reference(reference_table())) by_label[c.label] = c;
  EXPECT_FALSE(by_label["Fine-tune"].computed);
  EXPECT_EQ(format_percent(*by_label["EI-UCB"].computed), "2.70");
  EXPECT_EQ(format_percent(*by_label["single-level"].computed), "1.58");
  EXPECT_FALSE(by_label["single-level"].matches);
  for (const char* ok : {"UCB", "EI", "UCB-EI", "EI-UCB"}) EXPECT_TRUE(by_label[ok].matches) << ok;
}

TEST(Reference, FootnoteInRenderedReport) {
  const auto r = compare_configs({{"q", kLine2}}, {standard_pairings()[0]}, 0, {0}, base_config(),
                                 builtin_factory({"quadratic-bilevel"}));
  const std::string text = render_comparison(r, reference_table());
  EXPECT_NE(text.find("single-level: printed 1.18"), std::string::npos) << text;
  EXPECT_NE(text.find("= 1.58"), std::string::npos) << text;
  EXPECT_EQ(text.find("EI-UCB: printed"), std::string::npos);
}

TEST(Reference, MissingBaselineThrows) {
  ReferenceTable t{"none", {{"EI", 1.0, {}}}};
  EXPECT_THROW(check_reference(t), std::invalid_argument);
}

}  // namespace
}  // namespace bbo
