// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "ades/autodiff.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace ades;
using ades::testing::random_labels;
using ades::testing::random_tensor;

TEST_CASE("matmul: identity and zero products") {
  Graph g;
  Var i2 = g.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  Var b = g.constant(Tensor::matrix({{3, 4}, {5, 6}}));
  CHECK(matmul(i2, b).value() == Tensor::matrix({{3, 4}, {5, 6}}));

  Var row = g.constant(Tensor::matrix({{1, 2}}));
  Var zeros = g.constant(Tensor::matrix({{0}, {0}}));
  CHECK(matmul(row, zeros).value() == Tensor::matrix({{0}}));
}

TEST_CASE("matmul: shape mismatch names both shapes") {
  Graph g;
  Var a = g.constant(Tensor({2, 3}));
  Var b = g.constant(Tensor({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("matmul: gradients match finite differences for both operands") {
  SeededRng rng(11);
  const Tensor a = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({4, 2}, rng);
  const Tensor w = random_tensor({3, 2}, rng);
  ScalarBuilder wrt_a = [&](Graph& g, Var x) { return sum(mul_const(matmul(x, g.constant(b)), w)); };
  ScalarBuilder wrt_b = [&](Graph& g, Var x) { return sum(mul_const(matmul(g.constant(a), x), w)); };
  CHECK(finite_diff_check(wrt_a, a, 1e-5) < 1e-6);
  CHECK(finite_diff_check(wrt_b, b, 1e-5) < 1e-6);
}

TEST_CASE("relu: forward, dead inputs, gradient") {
  Graph g;
  CHECK(relu(g.constant(Tensor({3}, {-1, 0, 2}))).value() == Tensor({3}, {0, 0, 2}));

  Var neg = g.leaf(Tensor({4}, {-1, -2, -0.5, -3}));
  Var out = relu(neg);
  CHECK(max_abs(out.value()) == 0.0);
  g.backward(sum(out));
  CHECK(max_abs(neg.grad()) == 0.0);

  SeededRng rng(3);
  Tensor x = random_tensor({5, 4}, rng, -3, 3);
  for (double& v : x.data()) {
    if (std::abs(v) < 1e-3) v = 0.5;
  }
  const Tensor w = random_tensor({5, 4}, rng);
  ScalarBuilder f = [&](Graph&, Var v) { return sum(mul_const(relu(v), w)); };
  CHECK(finite_diff_check(f, x, 1e-5) < 1e-6);
}

TEST_CASE("sigmoid: midpoint, saturation, gradient") {
  Graph g;
  CHECK(sigmoid(g.constant(Tensor::scalar(0.0))).value()[0] == 0.5);
  const double hi = sigmoid(g.constant(Tensor::scalar(50.0))).value()[0];
  // 1 - sigma(50) ~ 1.9e-22 is below half an ulp of 1.0, so the result rounds to 1.
  CHECK(hi <= 1.0);
  CHECK(1.0 - hi < 1e-20);
  CHECK(std::isfinite(sigmoid(g.constant(Tensor::scalar(-800.0))).value()[0]));
  CHECK(sigmoid(g.constant(Tensor::scalar(-50.0))).value()[0] > 0.0);
  CHECK(sigmoid(g.constant(Tensor::scalar(-50.0))).value()[0] < 1e-20);

  SeededRng rng(5);
  const Tensor x = random_tensor({4, 3}, rng, -3, 3);
  const Tensor w = random_tensor({4, 3}, rng);
  ScalarBuilder f = [&](Graph&, Var v) { return sum(mul_const(sigmoid(v), w)); };
  CHECK(finite_diff_check(f, x, 1e-5) < 1e-6);
}

TEST_CASE("softmax cross entropy: closed forms and errors") {
  Graph g;
  const std::vector<int> y4 = {2};
  CHECK(softmax_cross_entropy(g.constant(Tensor({1, 4})), y4).loss.value()[0] ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));

  Tensor confident({1, 3});
  confident[1] = 1000.0;
  const std::vector<int> y1 = {1};
  CHECK(softmax_cross_entropy(g.constant(confident), y1).loss.value()[0] < 1e-12);

  const std::vector<int> bad = {3};
  CHECK_THROWS_AS(softmax_cross_entropy(g.constant(Tensor({1, 3})), bad), IndexError);

  // Large logits must not overflow: exp(1000) alone would.
  Tensor huge = Tensor::matrix({{1000.0, -1000.0, 0.0}});
  CHECK(softmax_cross_entropy(g.constant(huge), y1).loss.value()[0] == doctest::Approx(2000.0));
  const std::vector<int> y0 = {0};
  auto r = softmax_cross_entropy(g.constant(huge), y0);
  CHECK(r.loss.value()[0] == 0.0);
  CHECK(r.probs.all_finite());
}

TEST_CASE("softmax cross entropy: probabilities sum to one, gradient matches finite differences") {
  SeededRng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor logits = random_tensor({5, 3}, rng, -3, 3);
    const auto y = random_labels(5, 3, rng);
    Graph g;
    auto r = softmax_cross_entropy(g.constant(logits), y);
    for (std::size_t i = 0; i < 5; ++i) {
      double s = 0.0;
      for (double p : r.probs.row_span(i)) {
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        s += p;
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
    ScalarBuilder f = [&](Graph&, Var v) { return softmax_cross_entropy(v, y).loss; };
    CHECK(finite_diff_check(f, logits, 1e-5) < 1e-6);
    ScalarBuilder fs = [&](Graph&, Var v) { return softmax_cross_entropy(v, y, Reduction::kSum).loss; };
    CHECK(finite_diff_check(fs, logits, 1e-5) < 1e-6);
  }
}

TEST_CASE("dropout: identity cases and config error") {
  SeededRng rng(1);
  Graph g;
  const Tensor x = random_tensor({4, 5}, rng);
  CHECK(dropout(g.constant(x), 0.0, Mode::kTrain, rng).value() == x);
  CHECK(dropout(g.constant(x), 0.0, Mode::kEval, rng).value() == x);
  CHECK(dropout(g.constant(x), 0.7, Mode::kEval, rng).value() == x);
  CHECK_THROWS_AS(dropout(g.constant(x), 1.0, Mode::kTrain, rng), ConfigError);
}

TEST_CASE("dropout: survivor fraction and mean follow the law of large numbers") {
  const std::size_t n = 1000000;
  Tensor x({n});
  SeededRng data_rng(2);
  for (double& v : x.data()) v = data_rng.uniform(0.5, 1.5);
  SeededRng rng(99);
  Graph g;
  const Tensor y = dropout(g.constant(x), 0.5, Mode::kTrain, rng).value();
  std::size_t survivors = 0;
  double mean_in = 0.0, mean_out = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    survivors += y[i] != 0.0;
    mean_in += x[i];
    mean_out += y[i];
  }
  const double frac = static_cast<double>(survivors) / static_cast<double>(n);
  CHECK(std::abs(frac - 0.5) < 0.002);
  CHECK(std::abs(mean_out / mean_in - 1.0) < 0.01);
}

TEST_CASE("dropout: identical seeds give bit-identical masks") {
  SeededRng data_rng(4);
  const Tensor x = random_tensor({16, 16}, data_rng);
  SeededRng a(123), b(123);
  Graph g;
  CHECK(dropout(g.constant(x), 0.3, Mode::kTrain, a).value() == dropout(g.constant(x), 0.3, Mode::kTrain, b).value());
}

TEST_CASE("backward: sum gives ones, constants propagate nothing, non-scalar rejected") {
  Graph g;
  Var x = g.leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  g.backward(sum(x));
  CHECK(x.grad() == Tensor({2, 3}, 1.0));

  // Repeated backward accumulates.
  g.backward(sum(x));
  CHECK(x.grad() == Tensor({2, 3}, 2.0));
  g.zero_grad();
  CHECK(max_abs(x.grad()) == 0.0);

  Var c = g.constant(Tensor::scalar(3.0));
  g.backward(c);
  CHECK(max_abs(x.grad()) == 0.0);
  CHECK(c.grad()[0] == 0.0);

  CHECK_THROWS_AS(g.backward(x), ContractError);
}

TEST_CASE("backward: shared subexpressions accumulate from every consumer") {
  Graph g;
  Var x = g.leaf(Tensor({3}, {1.0, -2.0, 0.5}));
  // f = sum(x*x) + sum(3x)  ->  df/dx = 2x + 3
  Var f = add(sum(mul(x, x)), sum(scale(x, 3.0)));
  g.backward(f);
  CHECK(x.grad() == Tensor({3}, {5.0, -1.0, 4.0}));
}

TEST_CASE("finite_diff_check: exact quadratic and constant") {
  SeededRng rng(8);
  const Tensor x = random_tensor({3, 3}, rng, -10, 10);
  ScalarBuilder quad = [](Graph&, Var v) { return scale(sum(mul(v, v)), 0.5); };
  CHECK(finite_diff_check(quad, x, 1e-5) < 1e-9);
  ScalarBuilder constant = [](Graph& g, Var) { return g.constant(Tensor::scalar(4.2)); };
  CHECK(finite_diff_check(constant, x, 1e-5) == 0.0);
  CHECK_THROWS_AS(finite_diff_check(quad, x, 0.0), ContractError);
}

TEST_CASE("add_bias: broadcast over rows, bias gradient sums rows") {
  Graph g;
  Var x = g.leaf(Tensor::matrix({{1, 2}, {3, 4}, {5, 6}}));
  Var b = g.leaf(Tensor::matrix({{10, 20}}));
  Var y = add_bias(x, b);
  CHECK(y.value() == Tensor::matrix({{11, 22}, {13, 24}, {15, 26}}));
  g.backward(sum(y));
  CHECK(b.grad() == Tensor::matrix({{3, 3}}));
  CHECK_THROWS_AS(add_bias(x, g.constant(Tensor::matrix({{1, 2, 3}}))), DimensionError);
}
