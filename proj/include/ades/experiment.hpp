// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ades/training.hpp"
#include "json.hpp"

namespace ades {

struct DatasetSpec {
  std::string type = "blobs";  // "blobs" | "csv"
  std::size_t n_per_class = 1000;
  std::size_t n_per_class_test = 500;
  std::size_t classes = 2;
  std::size_t dim = 2;
  double spread = 0.08;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::vector<TrainMode> modes = {TrainMode::kAdes};
  DatasetSpec dataset;
  std::vector<std::size_t> hidden = {64, 64};
  double dropout = 0.1;
  std::size_t scheduler_hidden = 16;
  TrainConfig train;
  ScheduleConfig schedule;
  AttackConfig attack_train{10, 0.02, true, 0.0, 1.0};
  EvalSpec eval{{0.08}, AttackConfig{20, 0.02, true, 0.0, 1.0}, 256, 1};
  std::filesystem::path output_dir = "runs/experiment";

  std::vector<std::size_t> layer_sizes() const;
  /// TrainConfig for one entry of `modes`, with the experiment seed applied.
  TrainConfig train_config(TrainMode mode) const;
  ScheduleConfig schedule_config(TrainMode mode) const;
};

/// Parses an experiment file. Unknown keys are rejected with the list of
/// allowed keys for that section.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct ExperimentData {
  Dataset train;
  Dataset test;
};
ExperimentData load_data(const ExperimentConfig& cfg);

/// Header: epoch,mode,train_loss,clean_acc,robust_acc_eps1..N,mean_eps,wall_ms.
/// Numbers use 17 significant digits; unevaluated accuracies are empty fields.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& records,
                       std::size_t n_budgets);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

std::string format_real(double v);

struct ModeRun {
  TrainMode mode;
  std::filesystem::path dir;
  std::vector<MetricsRecord> records;
  TrainState state;
};

/// Continue a single-mode run from a checkpoint written after `start_epoch` epochs.
struct ResumePoint {
  std::filesystem::path checkpoint;
  int start_epoch = 0;
};

/// Trains and evaluates every configured mode, writing per mode
/// <output_dir>/<mode>/{metrics.csv, checkpoint.bin, config.json}.
std::vector<ModeRun> run_experiment(const ExperimentConfig& cfg, const TrainHooks& hooks = {},
                                    const ResumePoint* resume = nullptr);

}  // namespace ades
