// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_OBJECTIVE_HPP
#define BILEVEL_BO_OBJECTIVE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bilevel_bo/random.hpp"
#include "bilevel_bo/space.hpp"

namespace bbo {

/// One black-box result. train_loss is minimized, val_metric maximized.
struct Evaluation {
  double train_loss = 0.0;
  double val_metric = 0.0;
  std::map<std::string, double> aux;
};

/// Raised by an objective when a single evaluation fails. The study records
/// the trial as failed and continues.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Objective {
 public:
  virtual ~Objective() = default;
  virtual Evaluation evaluate(const Configuration& config) = 0;
  /// Whether wall time is meaningful. Pure in-process objectives report 0 so
  /// that study output stays byte-reproducible.
  virtual bool timed() const { return false; }
};

/// Adapts a callable to the Objective interface.
class FunctionObjective final : public Objective {
 public:
  explicit FunctionObjective(std::function<Evaluation(const Configuration&)> fn) : fn_(std::move(fn)) {}
  Evaluation evaluate(const Configuration& config) override { return fn_(config); }

 private:
  std::function<Evaluation(const Configuration&)> fn_;
};

enum class ObjectiveKind { builtin, external };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::builtin;
  std::string builtin_name;
  double noise_std = 0.0;           // builtin only
  std::vector<std::string> command;  // external only: executable + args
  double timeout_seconds = 3600.0;

  static ObjectiveSpec builtin(std::string name, double noise_std = 0.0) {
    ObjectiveSpec s;
    s.builtin_name = std::move(name);
    s.noise_std = noise_std;
    return s;
  }
  static ObjectiveSpec external(std::vector<std::string> command, double timeout_seconds = 3600.0) {
    ObjectiveSpec s;
    s.kind = ObjectiveKind::external;
    s.command = std::move(command);
    s.timeout_seconds = timeout_seconds;
    return s;
  }

  std::string label() const {
    if (kind == ObjectiveKind::builtin) return builtin_name;
    return command.empty() ? std::string("external") : command.front();
  }
};

namespace builtin {

inline double branin(double x1, double x2) {
  constexpr double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi, t = 1.0 / (8.0 * pi);
  const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(x1) + 10.0;
}

inline constexpr double kBraninMinimum = 0.39788735772973816;

/// Location of the loss bowl and of the metric peak along inner dims.
inline constexpr double kMisalignedLossCenter = 0.2;
inline constexpr double kMisalignedMetricCenter = 0.8;
inline constexpr double kMisalignedOuterCenter = 0.6;

inline std::vector<std::string> names() { return {"quadratic-bilevel", "misaligned", "branin"}; }

/// Default domain shipped with each builtin.
inline SearchSpace default_space(const std::string& name) {
  if (name == "quadratic-bilevel" || name == "misaligned")
    return SearchSpace({ParamSpec::uniform("theta", 0.0, 1.0, Level::outer),
                        ParamSpec::uniform("phi", 0.0, 1.0, Level::inner)});
  if (name == "branin")
    return SearchSpace({ParamSpec::uniform("x1", -5.0, 10.0, Level::outer),
                        ParamSpec::uniform("x2", 0.0, 15.0, Level::outer)});
  throw std::invalid_argument("unknown builtin objective '" + name + "'");
}

}  // namespace builtin

/// In-process synthetic problems. Bilevel builtins act on the encoded unit
/// coordinates, so they bind to any space with both levels: theta is the
/// encoded outer vector, phi the encoded inner vector.
///
///   quadratic-bilevel  G = mean (phi_j - mean(theta))^2
///                      F = -[mean (theta_i - 0.5)^2 + mean (phi_j - 0.5)^2]
///   misaligned         G = mean (phi_j - 0.2)^2
///                      F = 1 - mean (phi_j - 0.8)^2 - mean (theta_i - 0.6)^2
///   branin             two params mapped onto [-5,10] x [0,15];
///                      G = branin, F = -branin
class BuiltinObjective final : public Objective {
 public:
  BuiltinObjective(std::string name, SearchSpace space, double noise_std = 0.0, std::uint64_t study_seed = 0)
      : name_(std::move(name)), space_(std::move(space)), noise_std_(noise_std), study_seed_(study_seed) {
    if (name_ == "quadratic-bilevel" || name_ == "misaligned") {
      if (!space_.has_level(Level::inner) || !space_.has_level(Level::outer))
        throw std::invalid_argument("builtin '" + name_ + "' needs inner and outer parameters");
    } else if (name_ == "branin") {
      if (space_.dimension() != 2) throw std::invalid_argument("builtin 'branin' needs exactly two parameters");
    } else {
      throw std::invalid_argument("unknown builtin objective '" + name_ + "'");
    }
    if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_)) throw std::invalid_argument("noise_std must be >= 0");
  }

  Evaluation evaluate(const Configuration& config) override {
    Evaluation e = exact(config);
    if (noise_std_ > 0.0) {
      Rng rng(fnv1a(canonical(space_, config)) ^ Rng::splitmix64(study_seed_));
      e.train_loss += noise_std_ * rng.normal();
      e.val_metric += noise_std_ * rng.normal();
    }
    return e;
  }

  const std::string& name() const { return name_; }

 private:
  Evaluation exact(const Configuration& config) const {
    if (name_ == "branin") {
      const Eigen::VectorXd u = encode(space_, config, LevelFilter::all);
      const double f = builtin::branin(-5.0 + 15.0 * u(0), 15.0 * u(1));
      return {f, -f, {}};
    }
    const Eigen::VectorXd theta = encode(space_, config, LevelFilter::outer);
    const Eigen::VectorXd phi = encode(space_, config, LevelFilter::inner);
    if (name_ == "quadratic-bilevel") {
      const double g = (phi.array() - theta.mean()).square().mean();
      const double f = -((theta.array() - 0.5).square().mean() + (phi.array() - 0.5).square().mean());
      return {g, f, {}};
    }
    const double g = (phi.array() - builtin::kMisalignedLossCenter).square().mean();
    const double f = 1.0 - (phi.array() - builtin::kMisalignedMetricCenter).square().mean() -
                     (theta.array() - builtin::kMisalignedOuterCenter).square().mean();
    return {g, f, {}};
  }

  std::string name_;
  SearchSpace space_;
  double noise_std_;
  std::uint64_t study_seed_;
};

}  // namespace bbo

#endif  // BILEVEL_BO_OBJECTIVE_HPP
