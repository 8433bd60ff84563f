// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ades/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace ades {

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kAdes:
      return "ades";
    case TrainMode::kStaticDes:
      return "static_des";
    case TrainMode::kPgdAt:
      return "pgd_at";
    case TrainMode::kClean:
      return "clean";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "ades") return TrainMode::kAdes;
  if (name == "static_des") return TrainMode::kStaticDes;
  if (name == "pgd_at") return TrainMode::kPgdAt;
  if (name == "clean") return TrainMode::kClean;
  throw ConfigError("mode '" + name + "' is not one of: ades, static_des, pgd_at, clean");
}

ScheduleMode schedule_mode_for(TrainMode mode) {
  switch (mode) {
    case TrainMode::kAdes:
      return ScheduleMode::kLearnable;
    case TrainMode::kStaticDes:
      return ScheduleMode::kStatic;
    default:
      return ScheduleMode::kFixed;
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr_theta > 0.0)) throw ConfigError("lr_theta must be > 0");
  if (!(lr_omega > 0.0)) throw ConfigError("lr_omega must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay_theta >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(decay_factor > 0.0)) throw ConfigError("decay_factor must be > 0");
  if (mc_passes < 1) throw ConfigError("mc_passes must be >= 1");
  if (eval_every < 0 || checkpoint_every < 0) throw ConfigError("eval_every and checkpoint_every must be >= 0");
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) throw ConfigError("milestones must be strictly increasing");
  }
}

double lr_at(int epoch, const TrainConfig& cfg) {
  double lr = cfg.lr_theta;
  for (int m : cfg.milestones) {
    if (epoch >= m) lr *= cfg.decay_factor;
  }
  return lr;
}

void sgd_momentum_step(ParamSet& params, std::span<const Tensor> grads, double lr, double momentum,
                       double weight_decay) {
  if (grads.size() != params.size()) {
    throw DimensionError("sgd: " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (grads[i].shape() != p.value.shape()) {
      throw DimensionError("sgd: gradient " + shape_string(grads[i].shape()) + " for parameter '" + p.name +
                           "' of shape " + shape_string(p.value.shape()));
    }
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      p.momentum[j] = momentum * p.momentum[j] + grads[i][j] + weight_decay * p.value[j];
      p.value[j] -= lr * p.momentum[j];
    }
  }
}

TrainState initial_state(const std::vector<std::size_t>& layer_sizes, double dropout, std::size_t scheduler_hidden,
                         std::uint64_t seed) {
  return TrainState{MlpClassifier(layer_sizes, dropout, seed), SchedulerNet(scheduler_hidden, seed), 0};
}

EpochStreams EpochStreams::for_epoch(std::uint64_t seed, int epoch) {
  const auto e = static_cast<std::uint64_t>(epoch);
  return {SeededRng::stream(seed, "shuffle", e), SeededRng::stream(seed, "mc-dropout", e),
          SeededRng::stream(seed, "dropout", e), SeededRng::stream(seed, "attack-init", e)};
}

namespace {

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<Tensor> grads_of(const std::vector<Var>& vars) {
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (const auto& v : vars) out.push_back(v.grad());
  return out;
}

}  // namespace

StepMetrics train_step(TrainState& state, const Tensor& x, std::span<const int> y, const StepContext& ctx,
                       EpochStreams& rng) {
  if (x.rows() == 0 || y.empty()) throw ContractError("train_step: empty batch");
  const TrainMode mode = ctx.train.mode;
  const std::size_t batch = x.rows();
  StepMetrics metrics;

  // Scheduler graph (only ADES backpropagates into it).
  Graph sched_graph;
  std::vector<Var> omega;
  Var sigma_var;
  Tensor x_outer = x;

  if (mode != TrainMode::kClean) {
    std::vector<double> sigma;
    if (mode == TrainMode::kAdes || mode == TrainMode::kStaticDes) {
      const Cues cues = assemble_cues(state.classifier, x, y, ctx.train.mc_passes, rng.mc_dropout);
      metrics.mean_grad_norm = mean(cues.raw.grad_norm);
      metrics.mean_entropy = mean(cues.raw.entropy);
      metrics.mean_uncertainty = mean(cues.raw.uncertainty);
      if (mode == TrainMode::kAdes) {
        omega = state.scheduler.params().bind(sched_graph, true);
        sigma_var = state.scheduler.forward(sched_graph, omega, sched_graph.constant(cues.normalized.to_tensor()));
        sigma = sigma_var.value().vec();
      } else {
        sigma = static_fusion(cues.normalized, ctx.schedule.static_weights);
      }
    } else {
      sigma.assign(batch, 0.5);
    }
    const EpsilonSchedule schedule = epsilon_from_sigma(sigma, ctx.schedule);
    x_outer = pgd_attack(state.classifier, x, y, schedule.eps, ctx.attack, rng.attack_init);
    metrics.eps = schedule.eps;
    metrics.sigma = schedule.sigma;

    if (mode == TrainMode::kAdes) {
      // d J / d omega = mean_i [ dL_i/d eps_i * lambda * d sigma_i / d omega ].
      std::vector<double> dl_deps(batch, 0.0);
      if (ctx.schedule.lambda > 0.0) {
        // Zero budgets (eps_min == 0 with sigma == 0) carry no surrogate signal.
        std::vector<double> eps_safe = schedule.eps;
        for (double& e : eps_safe) e = e > 0.0 ? e : 1.0;
        dl_deps = epsilon_grad_surrogate(state.classifier, x_outer, x, y, eps_safe);
        for (std::size_t i = 0; i < batch; ++i) {
          if (!(schedule.eps[i] > 0.0)) dl_deps[i] = 0.0;
        }
      }
      Tensor weights({batch, 1});
      for (std::size_t i = 0; i < batch; ++i) {
        weights[i] = dl_deps[i] * ctx.schedule.lambda / static_cast<double>(batch);
      }
      sched_graph.backward(sum(mul_const(sigma_var, weights)));
    }
  }

  // Outer minimization in train mode (dropout active).
  Graph g;
  const auto theta = state.classifier.params().bind(g, true);
  Var logits = state.classifier.forward(g, theta, g.constant(x_outer), Mode::kTrain, rng.dropout);
  auto ce = softmax_cross_entropy(logits, y, Reduction::kMean);
  g.backward(ce.loss);
  metrics.loss = ce.loss.value()[0];

  const auto theta_grads = grads_of(theta);
  std::vector<Tensor> omega_grads;
  if (mode == TrainMode::kAdes) omega_grads = grads_of(omega);

  sgd_momentum_step(state.classifier.params(), theta_grads, ctx.lr_theta, ctx.train.momentum,
                    ctx.train.weight_decay_theta);
  if (mode == TrainMode::kAdes) {
    sgd_momentum_step(state.scheduler.params(), omega_grads, ctx.train.lr_omega, ctx.train.momentum, 0.0);
  }
  return metrics;
}

std::vector<MetricsRecord> train(TrainState& state, const TrainInputs& in, const TrainHooks& hooks) {
  in.train_cfg.validate();
  in.schedule.validate();
  in.attack.validate();
  in.train.validate();
  if (in.train.dim() != state.classifier.input_dim()) {
    throw DimensionError("dataset has " + std::to_string(in.train.dim()) + " features, classifier expects " +
                         std::to_string(state.classifier.input_dim()));
  }
  if (in.train.num_classes != state.classifier.num_classes()) {
    throw DimensionError("dataset has " + std::to_string(in.train.num_classes) + " classes, classifier outputs " +
                         std::to_string(state.classifier.num_classes()));
  }

  const TrainConfig& cfg = in.train_cfg;
  const std::size_t n = in.train.size();
  std::vector<MetricsRecord> records;

  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochStreams rng = EpochStreams::for_epoch(cfg.seed, epoch);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.shuffle.below(i)]);

    const StepContext ctx{cfg, in.schedule, in.attack, lr_at(epoch, cfg)};
    double loss_sum = 0.0, eps_sum = 0.0;
    std::size_t eps_count = 0;
    double eps_lo = std::numeric_limits<double>::infinity(), eps_hi = -eps_lo;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const Dataset batch = in.train.subset(std::span(order).subspan(start, stop - start));
      const StepMetrics step = train_step(state, batch.features, batch.labels, ctx, rng);
      loss_sum += step.loss * static_cast<double>(batch.size());
      for (double e : step.eps) {
        eps_sum += e;
        eps_lo = std::min(eps_lo, e);
        eps_hi = std::max(eps_hi, e);
      }
      eps_count += step.eps.size();
      if (hooks.on_step) hooks.on_step(epoch, step);
    }
    state.epoch = epoch + 1;

    MetricsRecord rec;
    rec.epoch = epoch + 1;
    rec.mode = to_string(cfg.mode);
    rec.train_loss = loss_sum / static_cast<double>(n);
    if (eps_count > 0) {
      rec.mean_eps = eps_sum / static_cast<double>(eps_count);
      rec.min_eps = eps_lo;
      rec.max_eps = eps_hi;
    }
    rec.robust_acc.assign(in.eval.budgets.size(), std::nullopt);
    const bool last = epoch + 1 == cfg.epochs;
    const bool due = cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0;
    if (in.test != nullptr && (due || last)) {
      const EvalResult ev = evaluate(state.classifier, *in.test, in.eval,
                                     SeededRng::stream(cfg.seed, "eval", static_cast<std::uint64_t>(epoch)).next_u64());
      rec.clean_acc = ev.clean_acc;
      for (std::size_t k = 0; k < ev.robust_acc.size(); ++k) rec.robust_acc[k] = ev.robust_acc[k];
    }
    if (cfg.record_wall_time) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    if (!hooks.checkpoint_dir.empty() && cfg.checkpoint_every > 0 && state.epoch % cfg.checkpoint_every == 0) {
      save_checkpoint(hooks.checkpoint_dir / ("ckpt_epoch_" + std::to_string(state.epoch) + ".bin"),
                      state.classifier.params(), state.scheduler.params());
    }
    if (hooks.on_epoch) hooks.on_epoch(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace ades
