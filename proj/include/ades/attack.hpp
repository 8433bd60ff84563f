// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "ades/models.hpp"

namespace ades {

struct AttackConfig {
  int steps = 10;
  double alpha = 2.0 / 255.0;
  bool random_start = true;
  double lo = 0.0;
  double hi = 1.0;

  void validate() const;
};

/// Clamps row i of delta to [-eps_i, +eps_i].
Tensor linf_project(const Tensor& delta, std::span<const double> eps);

/// L-infinity PGD with per-sample budgets. Every step takes a signed-gradient
/// ascent step on the summed cross entropy (eval-mode forward), projects back
/// onto the ball around x, and clamps to [lo, hi]. Rows with eps == 0 are
/// returned unchanged. The result carries no graph.
Tensor pgd_attack(const MlpClassifier& model, const Tensor& x, std::span<const int> y, std::span<const double> eps,
                  const AttackConfig& cfg, SeededRng& rng);

}  // namespace ades
