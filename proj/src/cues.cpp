// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ades/cues.hpp"

#include <algorithm>
#include <cmath>

namespace ades {

Tensor CueVector::to_tensor() const {
  Tensor z({size(), 3});
  for (std::size_t i = 0; i < size(); ++i) {
    z.at(i, 0) = grad_norm[i];
    z.at(i, 1) = entropy[i];
    z.at(i, 2) = uncertainty[i];
  }
  return z;
}

namespace {

struct GradAndLogits {
  std::vector<double> norms;
  Tensor logits;
};

GradAndLogits input_gradient_pass(const MlpClassifier& model, const Tensor& x, std::span<const int> y) {
  Graph g;
  SeededRng unused(0);
  Var input = g.leaf(x, true);
  Var logits = model.forward(g, input, Mode::kEval, unused);
  auto ce = softmax_cross_entropy(logits, y, Reduction::kSum);
  g.backward(ce.loss);
  const Tensor dx = g.grad(input);
  std::vector<double> norms(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (double v : dx.row_span(r)) s += v * v;
    norms[r] = std::sqrt(s);
  }
  return {std::move(norms), logits.value()};
}

}  // namespace

std::vector<double> gradient_norm(const MlpClassifier& model, const Tensor& x, std::span<const int> y) {
  return input_gradient_pass(model, x, y).norms;
}

std::vector<double> prediction_entropy(const Tensor& logits) {
  const Tensor p = softmax_rows(logits);
  std::vector<double> h(p.rows(), 0.0);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double pk : p.row_span(r)) {
      if (pk > 0.0) s -= pk * std::log(pk);
    }
    h[r] = std::max(0.0, s);
  }
  return h;
}

std::vector<double> variance_across_passes(std::span<const Tensor> passes) {
  if (passes.empty()) throw ConfigError("uncertainty needs at least one pass");
  const std::size_t batch = passes.front().rows(), k = passes.front().cols();
  for (const auto& p : passes) {
    if (p.rows() != batch || p.cols() != k) throw DimensionError("MC passes disagree in shape");
  }
  const double t = static_cast<double>(passes.size());
  std::vector<double> u(batch, 0.0);
  for (std::size_t r = 0; r < batch; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      // Shifted by the first pass so identical passes give exactly zero.
      const double ref = passes.front().at(r, j);
      double s1 = 0.0, s2 = 0.0;
      for (const auto& p : passes) {
        const double d = p.at(r, j) - ref;
        s1 += d;
        s2 += d * d;
      }
      const double m = s1 / t;
      const double var = std::max(0.0, s2 / t - m * m);
      acc += var;
    }
    u[r] = acc / static_cast<double>(k);
  }
  return u;
}

std::vector<double> mc_dropout_uncertainty(const MlpClassifier& model, const Tensor& x, int passes, SeededRng& rng) {
  if (passes < 1) throw ConfigError("MC dropout needs T >= 1 passes, got " + std::to_string(passes));
  std::vector<Tensor> probs;
  probs.reserve(passes);
  for (int t = 0; t < passes; ++t) {
    Graph g;
    probs.push_back(softmax_rows(model.forward(g, g.constant(x), Mode::kTrain, rng).value()));
  }
  return variance_across_passes(probs);
}

std::vector<double> batch_minmax_normalize(std::span<const double> v) {
  if (v.empty()) throw ContractError("cannot normalize an empty batch");
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double min = *lo, range = *hi - *lo;
  std::vector<double> out(v.size());
  if (range < 1e-12) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp((v[i] - min) / range, 0.0, 1.0);
  return out;
}

Cues assemble_cues(const MlpClassifier& model, const Tensor& x, std::span<const int> y, int mc_passes,
                   SeededRng& rng) {
  Cues c;
  auto pass = input_gradient_pass(model, x, y);
  c.raw.grad_norm = std::move(pass.norms);
  c.raw.entropy = prediction_entropy(pass.logits);
  c.raw.uncertainty = mc_dropout_uncertainty(model, x, mc_passes, rng);
  c.normalized.grad_norm = batch_minmax_normalize(c.raw.grad_norm);
  c.normalized.entropy = batch_minmax_normalize(c.raw.entropy);
  c.normalized.uncertainty = batch_minmax_normalize(c.raw.uncertainty);
  return c;
}

}  // namespace ades
