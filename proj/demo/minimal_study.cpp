// Copyright 2026 The bilevel-bo Authors.
// SPDX-License-Identifier: Apache-2.0

// Tunes a toy "training run": weight decay (inner) is picked by training
// loss, the regularization target (outer) by validation accuracy.

#include <cmath>
#include <iostream>

#include "bilevel_bo/bilevel.hpp"

int main() {
  using namespace bbo;

  const SearchSpace space({
      ParamSpec::uniform("target", 0.0, 1.0, Level::outer),
      ParamSpec::log_uniform("weight_decay", 1e-4, 1e-1, Level::inner),
  });

  FunctionObjective toy([](const Configuration& c) {
    const double wd = std::log10(c.real("weight_decay"));  // in [-4, -1]
    const double target = c.real("target");
    Evaluation e;
    e.train_loss = std::pow(wd + 4.0 - 3.0 * target, 2);
    e.val_metric = 0.9 - 0.1 * std::pow(wd + 2.5, 2) - 0.05 * std::pow(target - 0.4, 2);
    return e;
  });

  StudyConfig cfg;
  cfg.outer_budget = 12;
  cfg.inner_budget = 6;
  cfg.acq_inner = AcquisitionKind::ei();
  cfg.acq_outer = AcquisitionKind::ucb(2.0);
  cfg.seed = 7;

  const StudyResult r = run_study(toy, space, cfg);
  std::cout << "best val_metric " << r.best_val << " at target=" << r.best_config.real("target")
            << " weight_decay=" << r.best_config.real("weight_decay") << " after " << r.trials.size()
            << " evaluations\n";
}
