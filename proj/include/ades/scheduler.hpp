// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ades/cues.hpp"

namespace ades {

enum class ScheduleMode { kLearnable, kStatic, kFixed };

std::string to_string(ScheduleMode mode);
ScheduleMode parse_schedule_mode(const std::string& name);

struct ScheduleConfig {
  double eps_min = 2.0 / 255.0;
  double lambda = 12.0 / 255.0;
  ScheduleMode mode = ScheduleMode::kLearnable;
  std::array<double, 3> static_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double domain_width = 1.0;

  /// Throws ConfigError when the budget range leaves the input domain.
  void validate() const;
  double eps_max() const { return eps_min + lambda; }
};

struct EpsilonSchedule {
  std::vector<double> eps;
  std::vector<double> sigma;
  ScheduleConfig config;

  double mean_eps() const;
};

/// eps_i = eps_min + lambda * sigma_i.
EpsilonSchedule epsilon_from_sigma(std::span<const double> sigma, const ScheduleConfig& cfg);

/// clamp(w_g * g + w_H * H + w_u * u, 0, 1) per sample.
std::vector<double> static_fusion(const CueVector& z, const std::array<double, 3>& weights);

/// First-order estimate of d loss_i / d eps_i at the attack optimum:
/// grad_x loss(x_adv) . (x_adv - x) / eps_i for samples whose perturbation
/// reaches the ball boundary, zero otherwise. The loss is the per-sample
/// cross entropy under an eval-mode forward.
std::vector<double> epsilon_grad_surrogate(const MlpClassifier& model, const Tensor& x_adv, const Tensor& x,
                                           std::span<const int> y, std::span<const double> eps);

/// True when sample `row` has ||x_adv - x||_inf >= eps - 1e-9.
bool constraint_active(const Tensor& x_adv, const Tensor& x, std::size_t row, double eps);

}  // namespace ades
