// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>

#include "ades/training.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ades;

namespace {

ParamSet single(double value) {
  ParamSet ps;
  ps.add("p", Tensor({1}, value));
  return ps;
}

struct Toy {
  Dataset train = make_blobs(40, 2, 2, 0.08, 1);
  Dataset test = make_blobs(20, 2, 2, 0.08, 2, "test");
  TrainInputs inputs(TrainMode mode, int epochs) const {
    TrainInputs in{train, &test, {}, {}, {3, 0.02, true, 0.0, 1.0}, {}};
    in.train_cfg.mode = mode;
    in.train_cfg.epochs = epochs;
    in.train_cfg.batch_size = 16;
    in.train_cfg.milestones = {};
    in.train_cfg.seed = 5;
    in.train_cfg.record_wall_time = false;
    in.schedule.eps_min = 0.02;
    in.schedule.lambda = 0.1;
    in.eval.budgets = {0.05};
    in.eval.attack = {5, 0.02, true, 0.0, 1.0};
    return in;
  }
};

TrainState toy_state() { return initial_state({2, 16, 2}, 0.1, 8, 3); }

}  // namespace

TEST_CASE("sgd: plain descent, zero gradient, momentum unrolled") {
  ParamSet ps = single(1.0);
  std::vector<Tensor> g = {Tensor({1}, 0.5)};
  sgd_momentum_step(ps, g, 0.1, 0.0, 0.0);
  CHECK(ps[0].value[0] == doctest::Approx(1.0 - 0.05).epsilon(1e-15));

  ParamSet still = single(2.0);
  std::vector<Tensor> zero = {Tensor({1}, 0.0)};
  sgd_momentum_step(still, zero, 0.1, 0.9, 0.0);
  CHECK(still[0].value[0] == 2.0);

  ParamSet m = single(0.0);
  sgd_momentum_step(m, g, 0.1, 0.9, 0.0);
  sgd_momentum_step(m, g, 0.1, 0.9, 0.0);
  CHECK(m[0].value[0] == doctest::Approx(-0.1 * 0.5 * 2.9).epsilon(1e-14));

  ParamSet decayed = single(1.0);
  sgd_momentum_step(decayed, zero, 0.1, 0.0, 0.5);
  CHECK(decayed[0].value[0] == doctest::Approx(0.95).epsilon(1e-15));

  std::vector<Tensor> wrong = {Tensor({2}, 0.0)};
  CHECK_THROWS_AS(sgd_momentum_step(ps, wrong, 0.1, 0.9, 0.0), DimensionError);
}

TEST_CASE("lr: milestones are inclusive") {
  TrainConfig cfg;
  cfg.lr_theta = 0.1;
  cfg.milestones = {75, 90};
  CHECK(lr_at(0, cfg) == 0.1);
  CHECK(lr_at(74, cfg) == 0.1);
  CHECK(lr_at(75, cfg) == doctest::Approx(0.01));
  CHECK(lr_at(92, cfg) == doctest::Approx(0.001));
  cfg.milestones = {5, 5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_train_mode("static_des") == TrainMode::kStaticDes);
  CHECK_THROWS_AS(parse_train_mode("trades"), ConfigError);
}

TEST_CASE("train step: scheduler frozen outside ADES, budgets in range") {
  const Toy toy;
  const auto x = gather_rows(toy.train.features, std::vector<std::size_t>{0, 10, 45, 70});
  const std::vector<int> y = {0, 0, 1, 1};
  for (TrainMode mode : {TrainMode::kPgdAt, TrainMode::kClean, TrainMode::kStaticDes, TrainMode::kAdes}) {
    CAPTURE(to_string(mode));
    const TrainInputs in = toy.inputs(mode, 1);
    TrainState state = toy_state();
    const ParamSet omega = state.scheduler.params();
    const ParamSet theta = state.classifier.params();
    EpochStreams rng = EpochStreams::for_epoch(1, 0);
    const StepMetrics m = train_step(state, x, y, StepContext{in.train_cfg, in.schedule, in.attack, 0.05}, rng);
    CHECK_FALSE(state.classifier.params() == theta);
    if (mode == TrainMode::kAdes) {
      CHECK_FALSE(state.scheduler.params() == omega);
    } else {
      CHECK(state.scheduler.params() == omega);
    }
    if (mode == TrainMode::kClean) CHECK(m.eps.empty());
    for (double e : m.eps) {
      CHECK(e >= in.schedule.eps_min);
      CHECK(e <= in.schedule.eps_max());
    }
  }
}

TEST_CASE("train step: clean mode is plain SGD on dropout-train loss") {
  const Toy toy;
  const auto x = gather_rows(toy.train.features, std::vector<std::size_t>{1, 2, 50});
  const std::vector<int> y = {0, 0, 1};
  const TrainInputs in = toy.inputs(TrainMode::kClean, 1);
  TrainState state = toy_state();
  TrainState manual = toy_state();
  EpochStreams rng = EpochStreams::for_epoch(9, 0);
  train_step(state, x, y, StepContext{in.train_cfg, in.schedule, in.attack, 0.05}, rng);

  SeededRng dropout = EpochStreams::for_epoch(9, 0).dropout;
  Graph g;
  const auto theta = manual.classifier.params().bind(g, true);
  auto ce = softmax_cross_entropy(manual.classifier.forward(g, theta, g.constant(x), Mode::kTrain, dropout), y);
  g.backward(ce.loss);
  std::vector<Tensor> grads;
  for (const auto& v : theta) grads.push_back(v.grad());
  sgd_momentum_step(manual.classifier.params(), grads, 0.05, in.train_cfg.momentum, in.train_cfg.weight_decay_theta);
  CHECK(manual.classifier.params() == state.classifier.params());
}

TEST_CASE("train step: small ADES step lowers the loss at the same adversarial inputs") {
  const Toy toy;
  const auto idx = std::vector<std::size_t>{3, 8, 12, 41, 55, 66};
  const auto x = gather_rows(toy.train.features, idx);
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  TrainInputs in = toy.inputs(TrainMode::kAdes, 1);
  in.train_cfg.momentum = 0.0;
  in.train_cfg.weight_decay_theta = 0.0;
  TrainState state = initial_state({2, 16, 2}, 0.0, 8, 3);

  // Recreate the step's adversarial inputs from the same streams.
  EpochStreams probe = EpochStreams::for_epoch(4, 0);
  const Cues cues = assemble_cues(state.classifier, x, y, in.train_cfg.mc_passes, probe.mc_dropout);
  const Tensor sigma = state.scheduler.sigma(cues.normalized.to_tensor());
  const auto eps = epsilon_from_sigma(sigma.data(), in.schedule).eps;
  const Tensor adv = pgd_attack(state.classifier, x, y, eps, in.attack, probe.attack_init);

  auto loss_at = [&](const MlpClassifier& m) {
    Graph g;
    SeededRng unused(0);
    return softmax_cross_entropy(m.forward(g, g.constant(adv), Mode::kEval, unused), y).loss.value()[0];
  };
  const double before = loss_at(state.classifier);
  EpochStreams rng = EpochStreams::for_epoch(4, 0);
  const StepMetrics m = train_step(state, x, y, StepContext{in.train_cfg, in.schedule, in.attack, 1e-3}, rng);
  CHECK(m.eps == eps);
  CHECK(loss_at(state.classifier) < before);
}

TEST_CASE("train: zero epochs, determinism, lambda zero equals PGD-AT") {
  const Toy toy;
  TrainState fresh = toy_state();
  const TrainState untouched = toy_state();
  CHECK(train(fresh, toy.inputs(TrainMode::kAdes, 0)).empty());
  CHECK(fresh.classifier.params() == untouched.classifier.params());

  TrainState a = toy_state(), b = toy_state();
  const auto ra = train(a, toy.inputs(TrainMode::kAdes, 2));
  const auto rb = train(b, toy.inputs(TrainMode::kAdes, 2));
  CHECK(a.classifier.params() == b.classifier.params());
  CHECK(a.scheduler.params() == b.scheduler.params());
  REQUIRE(ra.size() == 2);
  CHECK(ra[1].clean_acc == rb[1].clean_acc);
  for (const auto& r : ra) {
    CHECK(r.min_eps >= 0.02);
    CHECK(r.max_eps <= 0.12);
  }

  TrainInputs ades = toy.inputs(TrainMode::kAdes, 2), pgd = toy.inputs(TrainMode::kPgdAt, 2);
  ades.schedule.lambda = 0.0;
  pgd.schedule.lambda = 0.0;
  TrainState sa = toy_state(), sp = toy_state();
  const auto la = train(sa, ades), lp = train(sp, pgd);
  CHECK(sa.classifier.params() == sp.classifier.params());
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(la[e].train_loss == lp[e].train_loss);
    CHECK(la[e].mean_eps == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(la[e].min_eps == 0.02);
    CHECK(la[e].max_eps == 0.02);
    CHECK(la[e].robust_acc == lp[e].robust_acc);
  }
}

TEST_CASE("train: resuming from a checkpoint matches uninterrupted training") {
  const Toy toy;
  const auto dir = std::filesystem::temp_directory_path() / "ades_tests" / "resume";
  std::filesystem::create_directories(dir);
  TrainInputs in = toy.inputs(TrainMode::kAdes, 3);
  in.train_cfg.checkpoint_every = 1;
  TrainState full = toy_state();
  const auto full_records = train(full, in, TrainHooks{{}, {}, dir});
  CHECK(std::filesystem::exists(dir / "ckpt_epoch_2.bin"));

  TrainState resumed = toy_state();
  load_checkpoint(dir / "ckpt_epoch_1.bin", resumed.classifier.params(), resumed.scheduler.params());
  resumed.epoch = 1;
  const auto tail = train(resumed, in);
  REQUIRE(tail.size() == 2);
  CHECK(resumed.classifier.params() == full.classifier.params());
  CHECK(resumed.scheduler.params() == full.scheduler.params());
  CHECK(tail[1].train_loss == full_records[2].train_loss);
}

TEST_CASE("train: dimension mismatch between data and model") {
  const Toy toy;
  TrainState wide = initial_state({3, 8, 2}, 0.1, 8, 1);
  CHECK_THROWS_AS(train(wide, toy.inputs(TrainMode::kAdes, 1)), DimensionError);
}
