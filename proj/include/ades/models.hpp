// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ades/autodiff.hpp"

namespace ades {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor momentum;  // same shape as value, zero-initialized

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Named flat parameter list with parallel momentum buffers.
class ParamSet {
 public:
  void add(std::string name, Tensor value);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::vector<Tensor> values() const;
  std::size_t scalar_count() const;

  /// Leaf nodes for every parameter, in order.
  std::vector<Var> bind(Graph& g, bool requires_grad) const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Parameter> params_;
};

/// Glorot-uniform weight in [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, SeededRng& rng);

/// Fully connected classifier: (affine -> ReLU -> dropout) per hidden layer,
/// then a final affine layer producing logits.
class MlpClassifier {
 public:
  MlpClassifier(std::vector<std::size_t> layer_sizes, double dropout_rate, std::uint64_t seed);

  std::size_t input_dim() const { return layers_.front(); }
  std::size_t num_classes() const { return layers_.back(); }
  const std::vector<std::size_t>& layer_sizes() const { return layers_; }
  double dropout_rate() const { return dropout_; }

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// Forward pass over parameters already bound into `g` (see ParamSet::bind).
  Var forward(Graph& g, std::span<const Var> bound, Var x, Mode mode, SeededRng& rng) const;
  /// Forward pass treating the parameters as constants.
  Var forward(Graph& g, Var x, Mode mode, SeededRng& rng) const;
  /// Eval-mode logits, no gradient tracking.
  Tensor logits(const Tensor& x) const;

 private:
  std::vector<std::size_t> layers_;
  double dropout_;
  ParamSet params_;
};

/// phi_omega: 3 -> hidden (ReLU) -> 1 (sigmoid).
class SchedulerNet {
 public:
  static constexpr std::size_t kInputWidth = 3;

  explicit SchedulerNet(std::size_t hidden = 16, std::uint64_t seed = 0);

  std::size_t hidden() const { return hidden_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// z is B x 3; returns sigma as B x 1.
  Var forward(Graph& g, std::span<const Var> bound, Var z) const;
  Tensor sigma(const Tensor& z) const;

 private:
  std::size_t hidden_;
  ParamSet params_;
};

/// Checkpoint layout (all integers little-endian):
///   "ADESCKPT" | u32 version | records...
/// record: u32 name_len | name bytes | u32 rank | u64 dims[rank] | f64 data[prod(dims)]
/// Classifier parameters, scheduler parameters, then classifier momentum and
/// scheduler momentum buffers (named "momentum/<param>").
inline constexpr char kCheckpointMagic[8] = {'A', 'D', 'E', 'S', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParamSet& classifier, const ParamSet& scheduler);
/// Loads into existing parameter sets; names and shapes must match.
void load_checkpoint(const std::filesystem::path& path, ParamSet& classifier, ParamSet& scheduler);

}  // namespace ades
