// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ades/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ades {

std::string to_string(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::kLearnable:
      return "learnable";
    case ScheduleMode::kStatic:
      return "static";
    case ScheduleMode::kFixed:
      return "fixed";
  }
  return "?";
}

ScheduleMode parse_schedule_mode(const std::string& name) {
  if (name == "learnable") return ScheduleMode::kLearnable;
  if (name == "static") return ScheduleMode::kStatic;
  if (name == "fixed") return ScheduleMode::kFixed;
  throw ConfigError("scheduler_mode '" + name + "' is not one of: learnable, static, fixed");
}

void ScheduleConfig::validate() const {
  if (!(eps_min >= 0.0) || !std::isfinite(eps_min)) throw ConfigError("eps_min must be a finite value >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a finite value >= 0");
  if (eps_min + lambda > domain_width) {
    throw ConfigError("eps_min + lambda = " + std::to_string(eps_min + lambda) + " exceeds the domain width " +
                      std::to_string(domain_width));
  }
  for (double w : static_weights) {
    if (!std::isfinite(w)) throw ConfigError("static weights must be finite");
  }
}

double EpsilonSchedule::mean_eps() const {
  if (eps.empty()) return 0.0;
  return std::accumulate(eps.begin(), eps.end(), 0.0) / static_cast<double>(eps.size());
}

EpsilonSchedule epsilon_from_sigma(std::span<const double> sigma, const ScheduleConfig& cfg) {
  cfg.validate();
  EpsilonSchedule s;
  s.config = cfg;
  s.sigma.assign(sigma.begin(), sigma.end());
  s.eps.resize(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] >= 0.0 && sigma[i] <= 1.0)) {
      throw ContractError("scheduling score " + std::to_string(sigma[i]) + " outside [0, 1]");
    }
    s.eps[i] = cfg.eps_min + cfg.lambda * sigma[i];
  }
  return s;
}

std::vector<double> static_fusion(const CueVector& z, const std::array<double, 3>& weights) {
  std::vector<double> sigma(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double s = weights[0] * z.grad_norm[i] + weights[1] * z.entropy[i] + weights[2] * z.uncertainty[i];
    sigma[i] = std::clamp(s, 0.0, 1.0);
  }
  return sigma;
}

bool constraint_active(const Tensor& x_adv, const Tensor& x, std::size_t row, double eps) {
  double linf = 0.0;
  auto a = x_adv.row_span(row);
  auto b = x.row_span(row);
  for (std::size_t j = 0; j < a.size(); ++j) linf = std::max(linf, std::abs(a[j] - b[j]));
  return linf >= eps - 1e-9;
}

std::vector<double> epsilon_grad_surrogate(const MlpClassifier& model, const Tensor& x_adv, const Tensor& x,
                                           std::span<const int> y, std::span<const double> eps) {
  if (x_adv.shape() != x.shape()) {
    throw DimensionError("surrogate: x_adv " + shape_string(x_adv.shape()) + " vs x " + shape_string(x.shape()));
  }
  if (eps.size() != x.rows()) throw DimensionError("surrogate: one budget per sample required");
  for (double e : eps) {
    if (!(e > 0.0)) throw ContractError("surrogate: budgets must be positive, got " + std::to_string(e));
  }
  Graph g;
  SeededRng unused(0);
  Var input = g.leaf(x_adv, true);
  auto ce = softmax_cross_entropy(model.forward(g, input, Mode::kEval, unused), y, Reduction::kSum);
  g.backward(ce.loss);
  const Tensor dx = g.grad(input);

  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (!constraint_active(x_adv, x, r, eps[r])) continue;
    auto grad = dx.row_span(r);
    auto adv = x_adv.row_span(r);
    auto clean = x.row_span(r);
    double dot = 0.0;
    for (std::size_t j = 0; j < grad.size(); ++j) dot += grad[j] * (adv[j] - clean[j]);
    out[r] = dot / eps[r];
  }
  return out;
}

}  // namespace ades
