// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ades/attack.hpp"
#include "ades/dataset.hpp"
#include "ades/evaluate.hpp"
#include "ades/scheduler.hpp"

namespace ades {

enum class TrainMode { kAdes, kStaticDes, kPgdAt, kClean };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);
/// Scheduler behaviour implied by a training mode.
ScheduleMode schedule_mode_for(TrainMode mode);

struct TrainConfig {
  int epochs = 50;
  std::size_t batch_size = 128;
  double lr_theta = 0.05;
  std::vector<int> milestones = {38, 45};
  double decay_factor = 0.1;
  double lr_omega = 1e-3;
  double momentum = 0.9;
  double weight_decay_theta = 5e-4;
  int mc_passes = 3;
  TrainMode mode = TrainMode::kAdes;
  std::uint64_t seed = 0;
  int eval_every = 1;        // 0 disables per-epoch evaluation (final epoch still evaluated)
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  bool record_wall_time = true;

  void validate() const;
};

/// Learning rate for a 0-based epoch. A milestone counts as passed once
/// epoch >= milestone.
double lr_at(int epoch, const TrainConfig& cfg);

/// v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v
void sgd_momentum_step(ParamSet& params, std::span<const Tensor> grads, double lr, double momentum,
                       double weight_decay);

struct TrainState {
  MlpClassifier classifier;
  SchedulerNet scheduler;
  int epoch = 0;  // completed epochs
};

TrainState initial_state(const std::vector<std::size_t>& layer_sizes, double dropout, std::size_t scheduler_hidden,
                         std::uint64_t seed);

/// Random streams for one epoch. Each purpose has its own stream so modes
/// that skip a stage (e.g. cue extraction) leave the others untouched.
struct EpochStreams {
  SeededRng shuffle;
  SeededRng mc_dropout;
  SeededRng dropout;
  SeededRng attack_init;

  static EpochStreams for_epoch(std::uint64_t seed, int epoch);
};

struct StepMetrics {
  double loss = 0.0;
  std::vector<double> eps;  // per-sample budgets used by the attack; empty in clean mode
  std::vector<double> sigma;
  double mean_grad_norm = 0.0;
  double mean_entropy = 0.0;
  double mean_uncertainty = 0.0;
};

struct StepContext {
  const TrainConfig& train;
  const ScheduleConfig& schedule;
  const AttackConfig& attack;
  double lr_theta;
};

/// One min-max update on a batch: cues -> schedule -> attack -> outer loss ->
/// simultaneous momentum-SGD updates of the classifier and the scheduler.
StepMetrics train_step(TrainState& state, const Tensor& x, std::span<const int> y, const StepContext& ctx,
                       EpochStreams& rng);

struct MetricsRecord {
  int epoch = 0;
  std::string mode;
  double train_loss = 0.0;
  std::optional<double> clean_acc;
  std::vector<std::optional<double>> robust_acc;  // one per evaluation budget
  double mean_eps = 0.0;
  double min_eps = 0.0;
  double max_eps = 0.0;
  double wall_ms = 0.0;
};

struct TrainHooks {
  std::function<void(int epoch, const StepMetrics&)> on_step;
  std::function<void(const MetricsRecord&)> on_epoch;
  /// Directory for periodic checkpoints (ckpt_epoch_<N>.bin); empty disables them.
  std::filesystem::path checkpoint_dir;
};

struct TrainInputs {
  const Dataset& train;
  const Dataset* test = nullptr;  // evaluation set; null skips evaluation
  TrainConfig train_cfg;
  ScheduleConfig schedule;
  AttackConfig attack;
  EvalSpec eval;
};

/// Runs epochs state.epoch .. train_cfg.epochs-1 and returns one record per epoch.
std::vector<MetricsRecord> train(TrainState& state, const TrainInputs& in, const TrainHooks& hooks = {});

}  // namespace ades
