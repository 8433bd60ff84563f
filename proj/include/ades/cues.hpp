// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "ades/models.hpp"

namespace ades {

/// Unnormalized per-sample robustness signals.
struct RawCues {
  std::vector<double> grad_norm;    // ||d loss / d x||_2
  std::vector<double> entropy;      // nats, in [0, ln K]
  std::vector<double> uncertainty;  // mean per-class MC-dropout variance
};

/// Batch-normalized cues, each in [0, 1]. This is the scheduler input.
struct CueVector {
  std::vector<double> grad_norm;
  std::vector<double> entropy;
  std::vector<double> uncertainty;

  std::size_t size() const { return grad_norm.size(); }
  /// B x 3 tensor with columns (grad_norm, entropy, uncertainty).
  Tensor to_tensor() const;
};

struct Cues {
  RawCues raw;
  CueVector normalized;
};

/// Per-sample input-gradient norm under an eval-mode forward. The batch loss
/// is summed so each row's gradient depends on that sample alone.
std::vector<double> gradient_norm(const MlpClassifier& model, const Tensor& x, std::span<const int> y);

std::vector<double> prediction_entropy(const Tensor& logits);

/// Mean over classes of the population variance of softmax probabilities.
/// `passes` holds T tensors of shape B x K.
std::vector<double> variance_across_passes(std::span<const Tensor> passes);

/// T train-mode forward passes with dropout masks drawn from `rng`.
std::vector<double> mc_dropout_uncertainty(const MlpClassifier& model, const Tensor& x, int passes, SeededRng& rng);

/// (v - min) / (max - min); a batch with spread below 1e-12 maps to 0.5.
std::vector<double> batch_minmax_normalize(std::span<const double> v);

Cues assemble_cues(const MlpClassifier& model, const Tensor& x, std::span<const int> y, int mc_passes,
                   SeededRng& rng);

}  // namespace ades
