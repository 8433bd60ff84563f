// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "ades/rng.hpp"
#include "ades/tensor.hpp"

namespace ades {

enum class Mode { kTrain, kEval };

class Graph;

/// Handle to a node of a Graph. Cheap to copy; only valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  Tensor grad() const;
  std::size_t id() const { return id_; }
  Graph& graph() const { return *graph_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// list is already a topological order and backward walks it in reverse.
/// A graph is single-threaded; build one per thread.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Node whose value was computed by an op. `parents` are node ids.
  Var emit(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id()).value; }
  /// Accumulated gradient; zeros if nothing reached the node.
  Tensor grad(Var v) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  /// Seeds d(root)/d(root) = 1 and accumulates into every node reachable
  /// from root, visiting each once. Calling twice without zero_grad() accumulates.
  void backward(Var root);
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }

  // Used by op backward rules.
  const Tensor& value_of(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }
  /// Gradient buffer for `id`, allocated as zeros on first use.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // empty until something accumulates into it
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;  // deque keeps value references stable as nodes are appended
};

enum class Reduction { kMean, kSum };

struct CrossEntropyResult {
  Var loss;       // scalar
  Tensor probs;   // B x K softmax probabilities, reusable by cue extraction
};

Var matmul(Var a, Var b);
/// x[B x n] + bias[1 x n] broadcast over rows; the only broadcasting op.
Var add_bias(Var x, Var bias);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
/// Elementwise product with a constant tensor of the same shape.
Var mul_const(Var x, const Tensor& weights);
Var sum(Var x);
Var relu(Var x);
Var sigmoid(Var x);
/// Inverted dropout. Train mode draws the mask from `rng`; eval is identity.
Var dropout(Var x, double rate, Mode mode, SeededRng& rng);
CrossEntropyResult softmax_cross_entropy(Var logits, std::span<const int> labels,
                                         Reduction reduction = Reduction::kMean);

/// Row-wise softmax with max subtraction; no graph involvement.
Tensor softmax_rows(const Tensor& logits);
double stable_sigmoid(double x);

using ScalarBuilder = std::function<Var(Graph&, Var)>;

/// Central-difference gradient of the scalar built by `f` at `x`.
Tensor numeric_gradient(const ScalarBuilder& f, const Tensor& x, double step);
/// Gradient computed by backward through the graph built by `f`.
Tensor analytic_gradient(const ScalarBuilder& f, const Tensor& x);

/// max_i |analytic_i - numeric_i| / max(|analytic_i|, |numeric_i|, 1e-8).
double finite_diff_check(const ScalarBuilder& f, const Tensor& x, double step);

}  // namespace ades
