// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ades/attack.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ades {

void AttackConfig::validate() const {
  if (steps < 1) throw ConfigError("attack steps must be >= 1, got " + std::to_string(steps));
  if (!(alpha > 0.0)) throw ConfigError("attack step size alpha must be > 0");
  if (!(lo < hi)) throw ConfigError("attack domain requires lo < hi");
}

Tensor linf_project(const Tensor& delta, std::span<const double> eps) {
  if (eps.size() != delta.rows()) throw DimensionError("linf_project: one budget per row required");
  Tensor out = delta;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (double& v : out.row_span(r)) v = std::clamp(v, -eps[r], eps[r]);
  }
  return out;
}

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Tensor input_gradient(const MlpClassifier& model, const Tensor& x, std::span<const int> y) {
  Graph g;
  SeededRng unused(0);
  Var input = g.leaf(x, true);
  auto ce = softmax_cross_entropy(model.forward(g, input, Mode::kEval, unused), y, Reduction::kSum);
  g.backward(ce.loss);
  return g.grad(input);
}

}  // namespace

Tensor pgd_attack(const MlpClassifier& model, const Tensor& x, std::span<const int> y, std::span<const double> eps,
                  const AttackConfig& cfg, SeededRng& rng) {
  cfg.validate();
  if (eps.size() != x.rows()) {
    throw DimensionError("pgd_attack: " + std::to_string(eps.size()) + " budgets for " + std::to_string(x.rows()) +
                         " samples");
  }
  for (double e : eps) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw ContractError("pgd_attack: budget must be finite and >= 0");
  }
  const std::size_t batch = x.rows(), d = x.cols();
  Tensor adv = x;

  if (cfg.random_start) {
    // Draw for every coordinate so the stream position does not depend on eps.
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        const double u = rng.uniform(-1.0, 1.0);
        adv.at(r, j) = std::clamp(x.at(r, j) + eps[r] * u, cfg.lo, cfg.hi);
      }
    }
  }

  for (int step = 0; step < cfg.steps; ++step) {
    const Tensor grad = input_gradient(model, adv, y);
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        const double moved = adv.at(r, j) + cfg.alpha * sign(grad.at(r, j));
        const double delta = std::clamp(moved - x.at(r, j), -eps[r], eps[r]);
        adv.at(r, j) = std::clamp(x.at(r, j) + delta, cfg.lo, cfg.hi);
      }
    }
  }

  for (std::size_t r = 0; r < batch; ++r) {
    if (eps[r] == 0.0) {
      auto src = x.row_span(r);
      std::copy(src.begin(), src.end(), adv.row_span(r).begin());
    }
  }
  return adv;
}

}  // namespace ades
