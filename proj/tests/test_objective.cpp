// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "bilevel_bo/objective.hpp"

namespace bbo {
namespace {

// Second transcription, parameterized as a(x2 - b x1^2 + c x1 - r)^2 + s(1-t)cos(x1) + s.
double branin_reference(double x1, double x2) {
  const double a = 1.0, b = 5.1 / (4.0 * std::pow(std::numbers::pi, 2)), c = 5.0 / std::numbers::pi, r = 6.0,
               s = 10.0, t = 1.0 / (8.0 * std::numbers::pi);
  return a * std::pow(x2 - b * x1 * x1 + c * x1 - r, 2) + s * (1.0 - t) * std::cos(x1) + s;
}

Configuration tp(double theta, double phi) { return {{"theta", theta}, {"phi", phi}}; }

TEST(Builtin, QuadraticBilevelOptimum) {
  BuiltinObjective f("quadratic-bilevel", builtin::default_space("quadratic-bilevel"));
  const auto e = f.evaluate(tp(0.5, 0.5));
  EXPECT_EQ(e.train_loss, 0.0);
  EXPECT_EQ(e.val_metric, 0.0);
  const auto g = f.evaluate(tp(0.2, 0.9));
  EXPECT_DOUBLE_EQ(g.train_loss, 0.49);
  EXPECT_DOUBLE_EQ(g.val_metric, -(0.09 + 0.16));
}

TEST(Builtin, QuadraticInnerArgminTracksTheta) {
  BuiltinObjective f("quadratic-bilevel", builtin::default_space("quadratic-bilevel"));
  for (int t = 0; t <= 10; ++t) {
    const double theta = t / 10.0;
    double best_phi = -1, best = 1e300;
    for (int i = 0; i <= 1000; ++i) {
      const double phi = i / 1000.0;
      const double g = f.evaluate(tp(theta, phi)).train_loss;
      if (g < best) {
        best = g;
        best_phi = phi;
      }
    }
    EXPECT_NEAR(best_phi, theta, 1e-3);
  }
}

TEST(Builtin, BraninAtKnownMinimizers) {
  BuiltinObjective f("branin", builtin::default_space("branin"));
  const double minimizers[3][2] = {{-std::numbers::pi, 12.275}, {std::numbers::pi, 2.275}, {9.42478, 2.475}};
  for (const auto& m : minimizers) {
    const auto e = f.evaluate({{"x1", m[0]}, {"x2", m[1]}});
    EXPECT_NEAR(e.val_metric, -0.397887, 1e-5);
    EXPECT_NEAR(-e.val_metric, branin_reference(m[0], m[1]), 1e-9);
    EXPECT_EQ(e.train_loss, -e.val_metric);
  }
  for (double x1 : {-5.0, 0.0, 2.5, 10.0})
    for (double x2 : {0.0, 7.5, 15.0}) EXPECT_NEAR(builtin::branin(x1, x2), branin_reference(x1, x2), 1e-9);
}

TEST(Builtin, MisalignedLossMinimizerIsFarFromMetricMaximum) {
  BuiltinObjective f("misaligned", builtin::default_space("misaligned"));
  double global_best = -1e300;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) global_best = std::max(global_best, f.evaluate(tp(i / 200.0, j / 200.0)).val_metric);
  for (int t = 0; t <= 10; ++t) {
    const double theta = t / 10.0;
    double best_phi = -1, best = 1e300;
    for (int i = 0; i <= 1000; ++i) {
      const double g = f.evaluate(tp(theta, i / 1000.0)).train_loss;
      if (g < best) {
        best = g;
        best_phi = i / 1000.0;
      }
    }
    EXPECT_NEAR(best_phi, 0.2, 1e-3);
    EXPECT_GE(global_best - f.evaluate(tp(theta, best_phi)).val_metric, 0.2);
  }
}

TEST(Builtin, BindsToFineTuningSpaceThroughEncoding) {
  const SearchSpace s({ParamSpec::log_uniform("learning_rate", 1e-6, 1e-5, Level::inner),
                       ParamSpec::categorical("batch_size", {8.0, 32.0}, Level::outer),
                       ParamSpec::uniform("weight_decay", 0.0, 0.1, Level::inner)});
  BuiltinObjective f("quadratic-bilevel", s);
  const auto e = f.evaluate({{"learning_rate", 1e-6}, {"batch_size", 8.0}, {"weight_decay", 0.05}});
  // theta = 0.25, phi = (0, 0.5)
  EXPECT_DOUBLE_EQ(e.train_loss, (0.0625 + 0.0625) / 2);
  EXPECT_DOUBLE_EQ(e.val_metric, -(0.0625 + 0.125));
}

TEST(Builtin, PureAndNoiseIsSeeded) {
  const auto space = builtin::default_space("misaligned");
  BuiltinObjective exact("misaligned", space);
  BuiltinObjective a("misaligned", space, 0.1, 5), b("misaligned", space, 0.1, 5), c("misaligned", space, 0.1, 6);
  const auto cfg = tp(0.3, 0.6);
  EXPECT_EQ(exact.evaluate(cfg).val_metric, exact.evaluate(cfg).val_metric);
  const auto ea = a.evaluate(cfg);
  EXPECT_EQ(ea.val_metric, b.evaluate(cfg).val_metric);
  EXPECT_EQ(ea.val_metric, a.evaluate(cfg).val_metric);
  EXPECT_NE(ea.val_metric, c.evaluate(cfg).val_metric);
  EXPECT_NE(ea.val_metric, exact.evaluate(cfg).val_metric);
}

TEST(Builtin, Errors) {
  EXPECT_THROW(BuiltinObjective("nope", builtin::default_space("branin")), std::invalid_argument);
  EXPECT_THROW(builtin::default_space("nope"), std::invalid_argument);
  EXPECT_THROW(BuiltinObjective("quadratic-bilevel", builtin::default_space("branin")), std::invalid_argument);
  EXPECT_THROW(BuiltinObjective("branin", builtin::default_space("branin"), -1.0), std::invalid_argument);
}

TEST(FunctionObjective, ForwardsCalls) {
  FunctionObjective f([](const Configuration& c) { return Evaluation{c.real("x"), -c.real("x"), {}}; });
  EXPECT_EQ(f.evaluate({{"x", 2.0}}).val_metric, -2.0);
  EXPECT_FALSE(f.timed());
}

}  // namespace
}  // namespace bbo
