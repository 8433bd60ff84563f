// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ades/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

namespace ades {

std::vector<int> predict(const MlpClassifier& model, const Tensor& x) {
  const Tensor logits = model.logits(x);
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row_span(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

unsigned threads_from_env() {
  const char* v = std::getenv("ADES_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  const long n = std::strtol(v, nullptr, 10);
  return n >= 1 ? static_cast<unsigned>(n) : 1u;
}

namespace {

struct BatchOutcome {
  std::size_t correct = 0;
  double linf_sum = 0.0;
  double l2_sum = 0.0;
};

std::size_t count_correct(const std::vector<int>& pred, std::span<const int> labels) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) n += pred[i] == labels[i];
  return n;
}

}  // namespace

EvalResult evaluate(const MlpClassifier& model, const Dataset& data, const EvalSpec& spec, std::uint64_t seed) {
  data.validate();
  if (spec.batch_size == 0) throw ConfigError("evaluation batch size must be positive");
  spec.attack.validate();
  for (double e : spec.budgets) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("evaluation budgets must be finite and >= 0");
  }
  const std::size_t n = data.size();
  const std::size_t n_batches = (n + spec.batch_size - 1) / spec.batch_size;
  const std::size_t n_budgets = spec.budgets.size();

  std::vector<std::vector<std::size_t>> batch_rows(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t lo = b * spec.batch_size, hi = std::min(n, lo + spec.batch_size);
    batch_rows[b].resize(hi - lo);
    std::iota(batch_rows[b].begin(), batch_rows[b].end(), lo);
  }

  // Item k < n_batches is the clean pass of batch k; the rest are (budget, batch) attacks.
  const std::size_t n_items = n_batches * (1 + n_budgets);
  std::vector<BatchOutcome> outcomes(n_items);

  auto run_item = [&](std::size_t item) {
    const std::size_t batch = item % n_batches;
    const Dataset part = data.subset(batch_rows[batch]);
    BatchOutcome& out = outcomes[item];
    if (item < n_batches) {
      out.correct = count_correct(predict(model, part.features), part.labels);
      return;
    }
    const std::size_t budget = item / n_batches - 1;
    const std::vector<double> eps(part.size(), spec.budgets[budget]);
    SeededRng rng = SeededRng::stream(seed, "eval-attack", budget * n_batches + batch);
    const Tensor adv = pgd_attack(model, part.features, part.labels, eps, spec.attack, rng);
    out.correct = count_correct(predict(model, adv), part.labels);
    for (std::size_t r = 0; r < part.size(); ++r) {
      double linf = 0.0, l2 = 0.0;
      auto a = adv.row_span(r);
      auto c = part.features.row_span(r);
      for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - c[j];
        linf = std::max(linf, std::abs(d));
        l2 += d * d;
      }
      out.linf_sum += linf;
      out.l2_sum += std::sqrt(l2);
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(n_items)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n_items; ++i) run_item(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n_items; i += workers) run_item(i);
      });
    }
  }

  EvalResult result;
  const double total = static_cast<double>(n);
  std::size_t clean = 0;
  for (std::size_t b = 0; b < n_batches; ++b) clean += outcomes[b].correct;
  result.clean_acc = static_cast<double>(clean) / total;
  for (std::size_t k = 0; k < n_budgets; ++k) {
    std::size_t correct = 0;
    double linf = 0.0, l2 = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const auto& o = outcomes[(k + 1) * n_batches + b];
      correct += o.correct;
      linf += o.linf_sum;
      l2 += o.l2_sum;
    }
    result.robust_acc.push_back(static_cast<double>(correct) / total);
    result.mean_linf.push_back(linf / total);
    result.mean_l2.push_back(l2 / total);
  }
  return result;
}

}  // namespace ades
