// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train, attack, eval, cues, gradcheck.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ades/experiment.hpp"

using namespace ades;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "experiment JSON file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "overrides the config seed");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.eval.threads = threads_from_env();
  return cfg;
}

/// Writes to `path`, or stdout when path is "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw IoError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

TrainState load_state(const ExperimentConfig& cfg, const std::string& checkpoint) {
  TrainState state = initial_state(cfg.layer_sizes(), cfg.dropout, cfg.scheduler_hidden, cfg.seed);
  if (!checkpoint.empty()) load_checkpoint(checkpoint, state.classifier.params(), state.scheduler.params());
  return state;
}

const Dataset& pick_split(const ExperimentData& data, const std::string& split) {
  if (split == "train") return data.train;
  if (split == "test") return data.test;
  throw ConfigError("split must be 'train' or 'test', got '" + split + "'");
}

int run_train(const Common& c, const std::string& out, const std::string& resume, int start_epoch,
              const std::vector<std::string>& modes) {
  ExperimentConfig cfg = resolve(c);
  if (!out.empty()) cfg.output_dir = out;
  if (!modes.empty()) {
    cfg.modes.clear();
    for (const auto& m : modes) cfg.modes.push_back(parse_train_mode(m));
  }
  TrainHooks hooks;
  hooks.on_epoch = [](const MetricsRecord& r) {
    std::fprintf(stderr, "[%s] epoch %d loss %.4f", r.mode.c_str(), r.epoch, r.train_loss);
    if (r.clean_acc) std::fprintf(stderr, " clean %.4f", *r.clean_acc);
    for (const auto& a : r.robust_acc) {
      if (a) std::fprintf(stderr, " robust %.4f", *a);
    }
    std::fprintf(stderr, " mean_eps %.4f\n", r.mean_eps);
  };
  std::optional<ResumePoint> point;
  if (!resume.empty()) point = ResumePoint{resume, start_epoch};
  const auto runs = run_experiment(cfg, hooks, point ? &*point : nullptr);
  for (const auto& run : runs) std::cout << to_string(run.mode) << ' ' << run.dir.string() << '\n';
  return 0;
}

int run_attack(const Common& c, const std::string& checkpoint, const std::string& split,
               const std::vector<double>& budgets, const std::string& out) {
  ExperimentConfig cfg = resolve(c);
  if (!budgets.empty()) cfg.eval.budgets = budgets;
  const ExperimentData data = load_data(cfg);
  const TrainState state = load_state(cfg, checkpoint);
  const EvalResult r = evaluate(state.classifier, pick_split(data, split), cfg.eval, cfg.seed);
  Output o(out);
  o.stream() << "eps,clean_acc,adv_acc,mean_linf,mean_l2\n";
  for (std::size_t b = 0; b < cfg.eval.budgets.size(); ++b) {
    o.stream() << format_real(cfg.eval.budgets[b]) << ',' << format_real(r.clean_acc) << ','
               << format_real(r.robust_acc[b]) << ',' << format_real(r.mean_linf[b]) << ','
               << format_real(r.mean_l2[b]) << '\n';
  }
  return 0;
}

int run_eval(const Common& c, const std::string& checkpoint, const std::string& split, const std::string& out) {
  const ExperimentConfig cfg = resolve(c);
  const ExperimentData data = load_data(cfg);
  const TrainState state = load_state(cfg, checkpoint);
  const EvalResult r = evaluate(state.classifier, pick_split(data, split), cfg.eval, cfg.seed);
  Output o(out);
  o.stream() << "split,clean_acc";
  for (std::size_t b = 0; b < cfg.eval.budgets.size(); ++b) o.stream() << ",robust_acc_eps" << b + 1;
  o.stream() << '\n' << split << ',' << format_real(r.clean_acc);
  for (double a : r.robust_acc) o.stream() << ',' << format_real(a);
  o.stream() << '\n';
  return 0;
}

int run_cues(const Common& c, const std::string& checkpoint, const std::string& split, const std::string& out) {
  const ExperimentConfig cfg = resolve(c);
  const ExperimentData data = load_data(cfg);
  const TrainState state = load_state(cfg, checkpoint);
  const Dataset& set = pick_split(data, split);
  Output o(out);
  o.stream() << "sample_index,g,H,u,g_norm,H_norm,u_norm\n";
  const std::size_t bs = cfg.train.batch_size;
  for (std::size_t start = 0, batch = 0; start < set.size(); start += bs, ++batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(set.size(), start + bs); ++i) idx.push_back(i);
    const Dataset part = set.subset(idx);
    SeededRng rng = SeededRng::stream(cfg.seed, "cues", batch);
    const Cues q = assemble_cues(state.classifier, part.features, part.labels, cfg.train.mc_passes, rng);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      o.stream() << idx[i] << ',' << format_real(q.raw.grad_norm[i]) << ',' << format_real(q.raw.entropy[i]) << ','
                 << format_real(q.raw.uncertainty[i]) << ',' << format_real(q.normalized.grad_norm[i]) << ','
                 << format_real(q.normalized.entropy[i]) << ',' << format_real(q.normalized.uncertainty[i]) << '\n';
    }
  }
  return 0;
}

int run_gradcheck(const Common& c, const std::string& checkpoint, std::size_t samples, double step,
                  double tolerance, const std::string& out) {
  const ExperimentConfig cfg = resolve(c);
  const ExperimentData data = load_data(cfg);
  const TrainState state = load_state(cfg, checkpoint);
  std::vector<std::size_t> idx;
  SeededRng pick = SeededRng::stream(cfg.seed, "gradcheck");
  for (std::size_t i = 0; i < std::min(samples, data.train.size()); ++i) idx.push_back(pick.below(data.train.size()));
  const Dataset batch = data.train.subset(idx);
  SeededRng mc = SeededRng::stream(cfg.seed, "gradcheck-mc");
  const Tensor z = assemble_cues(state.classifier, batch.features, batch.labels, cfg.train.mc_passes, mc)
                       .normalized.to_tensor();

  Output o(out);
  o.stream() << "parameter,max_rel_err,pass\n";
  bool ok = true;
  auto report = [&](const std::string& name, double err) {
    const bool pass = err < tolerance;
    ok = ok && pass;
    o.stream() << name << ',' << format_real(err) << ',' << (pass ? 1 : 0) << '\n';
  };
  const auto& theta = state.classifier.params();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    ScalarBuilder f = [&, i](Graph& g, Var p) {
      std::vector<Var> bound;
      for (std::size_t k = 0; k < theta.size(); ++k) bound.push_back(k == i ? p : g.constant(theta[k].value));
      SeededRng unused(0);
      Var logits = state.classifier.forward(g, bound, g.constant(batch.features), Mode::kEval, unused);
      return softmax_cross_entropy(logits, batch.labels).loss;
    };
    report(theta[i].name, finite_diff_check(f, theta[i].value, step));
  }
  const auto& omega = state.scheduler.params();
  for (std::size_t i = 0; i < omega.size(); ++i) {
    ScalarBuilder f = [&, i](Graph& g, Var p) {
      std::vector<Var> bound;
      for (std::size_t k = 0; k < omega.size(); ++k) bound.push_back(k == i ? p : g.constant(omega[k].value));
      return scale(sum(state.scheduler.forward(g, bound, g.constant(z))), 1.0 / static_cast<double>(z.rows()));
    };
    report(omega[i].name, finite_diff_check(f, omega[i].value, step));
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive perturbation-budget adversarial training lab"};
  app.require_subcommand(1);

  Common common;
  std::string out, train_out, checkpoint, resume, split = "test";
  int start_epoch = 0;
  std::vector<std::string> modes;
  std::vector<double> budgets;
  std::size_t samples = 16;
  double step = 1e-5, tolerance = 1e-6;

  auto* train = app.add_subcommand("train", "train every configured mode and write metrics and checkpoints");
  add_common(train, common);
  train->add_option("--out", train_out, "output directory (overrides output_dir)");
  train->add_option("--mode", modes, "train only these modes");
  auto* res = train->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);
  train->add_option("--start-epoch", start_epoch, "epochs already completed by the checkpoint")->needs(res);

  auto* attack = app.add_subcommand("attack", "PGD accuracy and perturbation norms per budget");
  add_common(attack, common);
  attack->add_option("--checkpoint", checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  attack->add_option("--eps", budgets, "budgets (overrides attack_eval.budgets)");
  attack->add_option("--split", split, "train or test");
  attack->add_option("--out", out, "CSV path, '-' for stdout")->default_val("-");

  auto* eval = app.add_subcommand("eval", "clean and robust accuracy of a checkpoint");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", split, "train or test");
  eval->add_option("--out", out, "CSV path, '-' for stdout")->default_val("-");

  auto* cues = app.add_subcommand("cues", "per-sample raw and normalized cues");
  add_common(cues, common);
  cues->add_option("--checkpoint", checkpoint, "model to inspect (default: freshly initialized)")
      ->check(CLI::ExistingFile);
  cues->add_option("--split", split, "train or test");
  cues->add_option("--out", out, "CSV path, '-' for stdout")->default_val("-");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every parameter gradient");
  add_common(grad, common);
  grad->add_option("--checkpoint", checkpoint, "model to check (default: freshly initialized)")
      ->check(CLI::ExistingFile);
  grad->add_option("--samples", samples, "batch size drawn from the training split");
  grad->add_option("--step", step, "central-difference step");
  grad->add_option("--tolerance", tolerance, "maximum relative error");
  grad->add_option("--out", out, "CSV path, '-' for stdout")->default_val("-");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(common, train_out, resume, start_epoch, modes);
    if (*attack) return run_attack(common, checkpoint, split, budgets, out);
    if (*eval) return run_eval(common, checkpoint, split, out);
    if (*cues) return run_cues(common, checkpoint, split, out);
    if (*grad) return run_gradcheck(common, checkpoint, samples, step, tolerance, out);
  } catch (const ades::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
