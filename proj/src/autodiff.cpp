// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ades/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ades {

const Tensor& Var::value() const { return graph_->value(*this); }
Tensor Var::grad() const { return graph_->grad(*this); }

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Graph::emit(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                [this](std::size_t p) { return nodes_[p].requires_grad; });
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.size() == 0) return Tensor(n.value.shape());
  return n.grad;
}

Tensor& Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Graph::backward(Var root) {
  if (root.graph_ != this) throw ContractError("backward: root belongs to another graph");
  if (value(root).size() != 1) {
    throw ContractError("backward: root must be a scalar, got shape " + shape_string(value(root).shape()));
  }
  if (!nodes_[root.id()].requires_grad) return;
  std::vector<char> reachable(root.id() + 1, 0);
  reachable[root.id()] = 1;
  grad_buffer(root.id())[0] += 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    if (!reachable[i]) continue;
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    for (std::size_t p : n.parents) reachable[p] = 1;
    if (n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

void Graph::zero_grad() {
  for (auto& n : nodes_) n.grad = Tensor();
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// C[m x n] += A[m x k] * B[k x n], with optional transposes of A or B.
void gemm_acc(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& c) {
  const std::size_t m = c.rows(), n = c.cols();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t a_cols = a.cols(), b_cols = b.cols();
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ta ? A[p * a_cols + i] : A[i * a_cols + p];
      if (aip == 0.0) continue;
      double* crow = C + i * n;
      if (!tb) {
        const double* brow = B + p * b_cols;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * B[j * b_cols + p];
      }
    }
  }
}

}  // namespace

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var matmul(Var a, Var b) {
  Graph& g = a.graph();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_string(av.shape()) + " by " + shape_string(bv.shape()));
  }
  Tensor out({av.rows(), bv.cols()});
  gemm_acc(av, false, bv, false, out);
  const std::size_t ia = a.id(), ib = b.id();
  return g.emit(std::move(out), {ia, ib}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& dc = gr.grad_of(self);
    if (gr.requires_grad(ia)) gemm_acc(dc, false, gr.value_of(ib), true, gr.grad_buffer(ia));
    if (gr.requires_grad(ib)) gemm_acc(gr.value_of(ia), true, dc, false, gr.grad_buffer(ib));
  });
}

Var add_bias(Var x, Var bias) {
  Graph& g = x.graph();
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 2 || bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) + " does not fit " + shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t c = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t j = 0; j < c; ++j) out.at(r, j) += bv[j];
  }
  const std::size_t ix = x.id(), ib = bias.id();
  return g.emit(std::move(out), {ix, ib}, [ix, ib, c](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad_of(self);
    if (gr.requires_grad(ix)) {
      Tensor& gx = gr.grad_buffer(ix);
      for (std::size_t i = 0; i < d.size(); ++i) gx[i] += d[i];
    }
    if (gr.requires_grad(ib)) {
      Tensor& gb = gr.grad_buffer(ib);
      for (std::size_t i = 0; i < d.size(); ++i) gb[i % c] += d[i];
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.graph().emit(std::move(out), {ia, ib}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad_of(self);
    for (std::size_t p : {ia, ib}) {
      if (!gr.requires_grad(p)) continue;
      Tensor& gp = gr.grad_buffer(p);
      for (std::size_t i = 0; i < d.size(); ++i) gp[i] += d[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.graph().emit(std::move(out), {ia, ib}, [ia, ib](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad_of(self);
    if (gr.requires_grad(ia)) {
      Tensor& ga = gr.grad_buffer(ia);
      const Tensor& bv = gr.value_of(ib);
      for (std::size_t i = 0; i < d.size(); ++i) ga[i] += d[i] * bv[i];
    }
    if (gr.requires_grad(ib)) {
      Tensor& gb = gr.grad_buffer(ib);
      const Tensor& av = gr.value_of(ia);
      for (std::size_t i = 0; i < d.size(); ++i) gb[i] += d[i] * av[i];
    }
  });
}

Var scale(Var x, double factor) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= factor;
  const std::size_t ix = x.id();
  return x.graph().emit(std::move(out), {ix}, [ix, factor](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad_of(self);
    Tensor& gx = gr.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) gx[i] += factor * d[i];
  });
}

Var mul_const(Var x, const Tensor& weights) {
  require_same_shape(x.value(), weights, "mul_const");
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= weights[i];
  const std::size_t ix = x.id();
  return x.graph().emit(std::move(out), {ix}, [ix, weights](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad_of(self);
    Tensor& gx = gr.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) gx[i] += weights[i] * d[i];
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return x.graph().emit(Tensor::scalar(s), {ix}, [ix](Graph& gr, std::size_t self) {
    const double d = gr.grad_of(self)[0];
    Tensor& gx = gr.grad_buffer(ix);
    for (double& v : gx.data()) v += d;
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  const std::size_t ix = x.id();
  return x.graph().emit(std::move(out), {ix}, [ix](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad_of(self);
    const Tensor& xv = gr.value_of(ix);
    Tensor& gx = gr.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += d[i];
    }
  });
}

Var sigmoid(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = stable_sigmoid(v);
  const std::size_t ix = x.id();
  return x.graph().emit(std::move(out), {ix}, [ix](Graph& gr, std::size_t self) {
    const Tensor& d = gr.grad_of(self);
    const Tensor& s = gr.value_of(self);
    Tensor& gx = gr.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) gx[i] += d[i] * s[i] * (1.0 - s[i]);
  });
}

Var dropout(Var x, double rate, Mode mode, SeededRng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::kEval || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(x.value().shape());
  for (double& m : mask.data()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return mul_const(x, mask);
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor p = logits;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    auto row = p.row_span(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      z += v;
    }
    for (double& v : row) v /= z;
  }
  return p;
}

CrossEntropyResult softmax_cross_entropy(Var logits, std::span<const int> labels, Reduction reduction) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 2) throw DimensionError("softmax_cross_entropy: logits must be B x K, got " + shape_string(lv.shape()));
  const std::size_t batch = lv.rows(), k = lv.cols();
  if (labels.size() != batch) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(batch));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw IndexError("label " + std::to_string(y) + " out of range [0, " + std::to_string(k) + ")");
    }
  }
  Tensor probs({batch, k});
  double total = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    auto row = lv.row_span(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    total += log_z - row[labels[r]];
    for (std::size_t j = 0; j < k; ++j) probs.at(r, j) = std::exp(row[j] - log_z);
  }
  const double norm = reduction == Reduction::kMean ? 1.0 / static_cast<double>(batch) : 1.0;
  std::vector<int> ys(labels.begin(), labels.end());
  const std::size_t il = logits.id();
  Var loss = logits.graph().emit(Tensor::scalar(total * norm), {il},
                                 [il, probs, ys = std::move(ys), norm, k](Graph& gr, std::size_t self) {
                                   const double d = gr.grad_of(self)[0] * norm;
                                   Tensor& gl = gr.grad_buffer(il);
                                   for (std::size_t r = 0; r < ys.size(); ++r) {
                                     for (std::size_t j = 0; j < k; ++j) {
                                       const double onehot = static_cast<int>(j) == ys[r] ? 1.0 : 0.0;
                                       gl.at(r, j) += d * (probs.at(r, j) - onehot);
                                     }
                                   }
                                 });
  return {loss, std::move(probs)};
}

Tensor numeric_gradient(const ScalarBuilder& f, const Tensor& x, double step) {
  if (!(step > 0.0)) throw ContractError("finite-difference step must be positive");
  auto eval = [&f](const Tensor& at) {
    Graph g;
    Var out = f(g, g.constant(at));
    if (out.value().size() != 1) throw ContractError("finite_diff_check: function must return a scalar");
    return out.value()[0];
  };
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = eval(probe);
    probe[i] = x[i] - step;
    const double down = eval(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

Tensor analytic_gradient(const ScalarBuilder& f, const Tensor& x) {
  Graph g;
  Var in = g.leaf(x, true);
  Var out = f(g, in);
  g.backward(out);
  return g.grad(in);
}

double finite_diff_check(const ScalarBuilder& f, const Tensor& x, double step) {
  const Tensor numeric = numeric_gradient(f, x, step);
  const Tensor analytic = analytic_gradient(f, x);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace ades
