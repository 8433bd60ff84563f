// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ades/models.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ades;
using ades::testing::random_labels;
using ades::testing::random_tensor;

namespace {

void zero_all(ParamSet& ps) {
  for (auto& p : ps) p.value.fill(0.0);
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ades_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("classifier: zero parameters give zero logits") {
  MlpClassifier model({3, 8, 4}, 0.2, 1);
  zero_all(model.params());
  SeededRng rng(2);
  const Tensor x = random_tensor({5, 3}, rng, 0, 1);
  Graph g;
  CHECK(max_abs(model.forward(g, g.constant(x), Mode::kTrain, rng).value()) == 0.0);
  CHECK(max_abs(model.logits(x)) == 0.0);
}

TEST_CASE("classifier: eval deterministic, train stochastic") {
  MlpClassifier model({2, 32, 32, 3}, 0.5, 7);
  SeededRng data(3);
  const Tensor x = random_tensor({6, 2}, data, 0, 1);
  CHECK(model.logits(x) == model.logits(x));

  SeededRng a = SeededRng::stream(1, "dropout"), b = SeededRng::stream(2, "dropout");
  Graph g;
  const Tensor la = model.forward(g, g.constant(x), Mode::kTrain, a).value();
  const Tensor lb = model.forward(g, g.constant(x), Mode::kTrain, b).value();
  CHECK_FALSE(la == lb);
}

TEST_CASE("classifier: width mismatch is a dimension error") {
  MlpClassifier model({3, 4, 2}, 0.0, 1);
  Graph g;
  SeededRng rng(0);
  CHECK_THROWS_AS(model.forward(g, g.constant(Tensor({2, 5})), Mode::kEval, rng), DimensionError);
}

TEST_CASE("classifier: every parameter gradient matches finite differences") {
  SeededRng rng(21);
  MlpClassifier model({4, 6, 5, 3}, 0.0, 5);
  const Tensor x = random_tensor({7, 4}, rng, 0, 1);
  const auto y = random_labels(7, 3, rng);
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    CAPTURE(model.params()[i].name);
    const auto f = ades::testing::classifier_param_loss(model, i, x, y);
    CHECK(finite_diff_check(f, model.params()[i].value, 1e-5) < 1e-6);
  }
}

TEST_CASE("scheduler: sigmoid midpoint, saturation, range") {
  SchedulerNet net(16, 3);
  SeededRng rng(4);
  const Tensor z = random_tensor({10, 3}, rng, 0, 1);

  SchedulerNet zeroed = net;
  zeroed.params()[2].value.fill(0.0);
  zeroed.params()[3].value.fill(0.0);
  const Tensor mid = zeroed.sigma(z);
  for (double s : mid.data()) CHECK(s == 0.5);

  SchedulerNet saturated = net;
  saturated.params()[3].value.fill(40.0);
  const Tensor high = saturated.sigma(z);
  for (double s : high.data()) CHECK(s > 1.0 - 1e-12);

  const Tensor sig = net.sigma(z);
  for (double s : sig.data()) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  Graph g;
  const auto bound = net.params().bind(g, false);
  CHECK_THROWS_AS(net.forward(g, bound, g.constant(Tensor({2, 4}))), DimensionError);
}

TEST_CASE("scheduler: gradient of mean sigma matches finite differences") {
  SeededRng rng(9);
  SchedulerNet net(16, 11);
  // Move biases off zero so the ReLU pattern is generic.
  for (double& v : net.params()[1].value.data()) v = rng.uniform(-0.2, 0.2);
  const Tensor z = random_tensor({12, 3}, rng, 0, 1);
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    CAPTURE(net.params()[i].name);
    const auto f = ades::testing::scheduler_param_objective(net, i, z);
    CHECK(finite_diff_check(f, net.params()[i].value, 1e-5) < 1e-6);
  }
  // And with respect to the cues themselves.
  ScalarBuilder wrt_z = [&](Graph& g, Var zv) {
    return scale(sum(net.forward(g, net.params().bind(g, false), zv)), 1.0 / 12.0);
  };
  CHECK(finite_diff_check(wrt_z, z, 1e-5) < 1e-6);
}

TEST_CASE("init: deterministic, zero biases, Glorot variance") {
  MlpClassifier a({2, 64, 64, 2}, 0.1, 42), b({2, 64, 64, 2}, 0.1, 42), c({2, 64, 64, 2}, 0.1, 43);
  CHECK(a.params() == b.params());
  CHECK_FALSE(a.params() == c.params());
  for (const auto& p : a.params()) {
    if (p.name.find(".b") != std::string::npos) CHECK(max_abs(p.value) == 0.0);
    CHECK(max_abs(p.momentum) == 0.0);
    CHECK(p.momentum.shape() == p.value.shape());
  }

  SeededRng rng(5);
  const Tensor w = glorot_uniform(256, 256, rng);
  double mean = 0.0, sq = 0.0;
  for (double v : w.data()) {
    mean += v;
    sq += v * v;
  }
  mean /= static_cast<double>(w.size());
  const double var = sq / static_cast<double>(w.size()) - mean * mean;
  const double expected = 2.0 / 512.0;  // (2 * limit)^2 / 12 with limit = sqrt(6 / 512)
  CHECK(std::abs(var / expected - 1.0) < 0.10);
  const double limit = std::sqrt(6.0 / 512.0);
  CHECK(max_abs(w) <= limit);
}

TEST_CASE("checkpoint: round trip restores parameters and momentum bitwise") {
  MlpClassifier clf({2, 8, 2}, 0.1, 3);
  SchedulerNet sched(4, 3);
  SeededRng rng(1);
  for (auto& p : clf.params()) {
    for (double& v : p.momentum.data()) v = rng.uniform(-1, 1);
  }
  sched.params()[0].momentum[0] = -0.0;
  sched.params()[1].momentum[1] = 1e-310;  // subnormal survives
  const auto path = temp_file("roundtrip.bin");
  save_checkpoint(path, clf.params(), sched.params());

  MlpClassifier clf2({2, 8, 2}, 0.1, 99);
  SchedulerNet sched2(4, 99);
  load_checkpoint(path, clf2.params(), sched2.params());
  CHECK(clf2.params() == clf.params());
  CHECK(sched2.params() == sched.params());
  CHECK(std::signbit(sched2.params()[0].momentum[0]));

  // Header layout.
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic, 8) == "ADESCKPT");
  unsigned char ver[4];
  in.read(reinterpret_cast<char*>(ver), 4);
  CHECK(ver[0] == 1);
  CHECK(ver[1] == 0);
}

TEST_CASE("checkpoint: shape mismatch, truncation and bad magic are rejected") {
  MlpClassifier clf({2, 8, 2}, 0.1, 3);
  SchedulerNet sched(4, 3);
  const auto path = temp_file("mismatch.bin");
  save_checkpoint(path, clf.params(), sched.params());

  MlpClassifier wider({2, 9, 2}, 0.1, 3);
  CHECK_THROWS_AS(load_checkpoint(path, wider.params(), sched.params()), IoError);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 3);
  MlpClassifier same({2, 8, 2}, 0.1, 3);
  const ParamSet before = same.params();
  CHECK_THROWS_AS(load_checkpoint(path, same.params(), sched.params()), IoError);
  CHECK(same.params() == before);

  std::ofstream(temp_file("garbage.bin"), std::ios::binary) << "NOTACKPT....";
  CHECK_THROWS_AS(load_checkpoint(temp_file("garbage.bin"), same.params(), sched.params()), IoError);
  CHECK_THROWS_AS(load_checkpoint(temp_file("does_not_exist.bin"), same.params(), sched.params()), IoError);
}
