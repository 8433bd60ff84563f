// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ades/attack.hpp"
#include "ades/dataset.hpp"

namespace ades {

struct EvalSpec {
  std::vector<double> budgets;  // uniform attack budgets, one robust accuracy each
  AttackConfig attack{20, 0.02, true, 0.0, 1.0};
  std::size_t batch_size = 256;
  unsigned threads = 1;
};

struct EvalResult {
  double clean_acc = 0.0;
  std::vector<double> robust_acc;
  std::vector<double> mean_linf;  // mean ||x_adv - x||_inf per budget
  std::vector<double> mean_l2;
};

/// Argmax of eval-mode logits; ties resolve to the lowest class index.
std::vector<int> predict(const MlpClassifier& model, const Tensor& x);

/// Clean accuracy plus fixed-budget PGD accuracy for every budget. The attack
/// stream for (budget b, batch i) is derived from `seed`, b and i, so results
/// do not depend on the number of threads.
EvalResult evaluate(const MlpClassifier& model, const Dataset& data, const EvalSpec& spec, std::uint64_t seed);

/// Worker count from ADES_THREADS (default 1).
unsigned threads_from_env();

}  // namespace ades
