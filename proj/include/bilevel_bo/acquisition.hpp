// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef BILEVEL_BO_ACQUISITION_HPP
#define BILEVEL_BO_ACQUISITION_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bilevel_bo/random.hpp"
#include "bilevel_bo/space.hpp"
#include "bilevel_bo/surrogate.hpp"

namespace bbo {

enum class AcquisitionVariant { ei, ucb };

struct AcquisitionKind {
  AcquisitionVariant variant = AcquisitionVariant::ei;
  double kappa = 2.0;  // UCB only

  static AcquisitionKind ei() { return {AcquisitionVariant::ei, 2.0}; }
  static AcquisitionKind ucb(double kappa = 2.0) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("UCB kappa must be positive");
    return {AcquisitionVariant::ucb, kappa};
  }

  std::string_view name() const { return variant == AcquisitionVariant::ei ? "EI" : "UCB"; }

  friend bool operator==(const AcquisitionKind& a, const AcquisitionKind& b) {
    return a.variant == b.variant && (a.variant == AcquisitionVariant::ei || a.kappa == b.kappa);
  }
};

/// Best observed objective so far, in the maximize convention.
struct Incumbent {
  double value = 0.0;
};

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// E[max(f - f_best, 0)] for f ~ N(mean, std^2).
inline double ei_score(double mean, double std, Incumbent incumbent) {
  if (!std::isfinite(mean) || !std::isfinite(std) || !std::isfinite(incumbent.value))
    throw std::invalid_argument("ei_score: non-finite input");
  if (std < 0.0) throw std::invalid_argument("ei_score: negative std");
  const double improvement = mean - incumbent.value;
  if (std == 0.0) return std::max(improvement, 0.0);
  const double z = improvement / std;
  return std::max(improvement * normal_cdf(z) + std * normal_pdf(z), 0.0);
}

inline double ucb_score(double mean, double std, double kappa) {
  if (!std::isfinite(mean) || !std::isfinite(std) || !std::isfinite(kappa))
    throw std::invalid_argument("ucb_score: non-finite input");
  if (std < 0.0) throw std::invalid_argument("ucb_score: negative std");
  if (!(kappa > 0.0)) throw std::invalid_argument("ucb_score: kappa must be positive");
  return mean + kappa * std;
}

inline double acquisition_score(const AcquisitionKind& acq, const Prediction& p, Incumbent incumbent) {
  return acq.variant == AcquisitionVariant::ei ? ei_score(p.mean, p.std, incumbent) : ucb_score(p.mean, p.std, acq.kappa);
}

struct Proposal {
  Configuration config;
  std::size_t index = 0;
  double score = 0.0;
};

/// Random-candidate acquisition maximization. Draws `candidates` configs via
/// sample(), returns the highest-scoring one (lowest index on ties).
inline Proposal propose_detailed(const GpModel& model, const SearchSpace& space, LevelFilter level,
                                 const AcquisitionKind& acq, Incumbent incumbent, std::size_t candidates, Rng& rng) {
  if (candidates == 0) throw std::invalid_argument("propose: candidates must be positive");
  if (static_cast<Eigen::Index>(space.dimension(level)) != model.dimension())
    throw std::invalid_argument("propose: model dimension does not match level");

  std::vector<Configuration> configs;
  configs.reserve(candidates);
  Eigen::MatrixXd xs(model.dimension(), static_cast<Eigen::Index>(candidates));
  for (std::size_t i = 0; i < candidates; ++i) {
    configs.push_back(sample(space, level, rng));
    xs.col(static_cast<Eigen::Index>(i)) = encode(space, configs.back(), level);
  }
  const auto preds = model.predict_many(xs);

  Proposal best;
  best.score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates; ++i) {
    const double s = acquisition_score(acq, preds[i], incumbent);
    if (s > best.score) {
      best.score = s;
      best.index = i;
    }
  }
  best.config = std::move(configs[best.index]);
  return best;
}

inline Configuration propose(const GpModel& model, const SearchSpace& space, LevelFilter level,
                             const AcquisitionKind& acq, Incumbent incumbent, std::size_t candidates, Rng& rng) {
  return propose_detailed(model, space, level, acq, incumbent, candidates, rng).config;
}

}  // namespace bbo

#endif  // BILEVEL_BO_ACQUISITION_HPP
