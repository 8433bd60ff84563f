// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ades/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ades {

using nlohmann::json;

std::vector<std::size_t> ExperimentConfig::layer_sizes() const {
  std::vector<std::size_t> sizes{dataset.dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(dataset.classes);
  return sizes;
}

TrainConfig ExperimentConfig::train_config(TrainMode mode) const {
  TrainConfig t = train;
  t.mode = mode;
  t.seed = seed;
  return t;
}

ScheduleConfig ExperimentConfig::schedule_config(TrainMode mode) const {
  ScheduleConfig s = schedule;
  s.mode = schedule_mode_for(mode);
  return s;
}

namespace {

void check_keys(const json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("section '" + section + "' must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) {
      std::string list;
      for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
      throw ConfigError("unknown key '" + key + "' in " + section + "; allowed keys: " + list);
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& into) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "experiment config",
             {"name", "seed", "mode", "modes", "dataset", "model", "train", "eps_min", "lambda", "scheduler_mode",
              "static_weights", "attack_train", "attack_eval", "domain", "output_dir"});
  ExperimentConfig cfg;
  read(j, "name", cfg.name);
  read(j, "seed", cfg.seed);
  std::string out_dir;
  read(j, "output_dir", out_dir);
  if (!out_dir.empty()) cfg.output_dir = out_dir;

  if (j.contains("mode") && j.contains("modes")) throw ConfigError("give either 'mode' or 'modes', not both");
  std::vector<std::string> mode_names;
  if (j.contains("mode")) mode_names.push_back(j.at("mode").get<std::string>());
  read(j, "modes", mode_names);
  if (j.contains("scheduler_mode")) {
    const ScheduleMode sm = parse_schedule_mode(j.at("scheduler_mode").get<std::string>());
    if (mode_names.empty()) {
      mode_names.push_back(sm == ScheduleMode::kLearnable ? "ades" : sm == ScheduleMode::kStatic ? "static_des" : "pgd_at");
    }
    for (const auto& m : mode_names) {
      const TrainMode tm = parse_train_mode(m);
      if (tm != TrainMode::kClean && schedule_mode_for(tm) != sm) {
        throw ConfigError("scheduler_mode '" + to_string(sm) + "' conflicts with mode '" + m + "'");
      }
    }
  }
  if (!mode_names.empty()) {
    cfg.modes.clear();
    for (const auto& m : mode_names) cfg.modes.push_back(parse_train_mode(m));
  }

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, "dataset",
               {"type", "n_per_class", "n_per_class_test", "classes", "dim", "spread", "train", "test"});
    read(d, "type", cfg.dataset.type);
    read(d, "n_per_class", cfg.dataset.n_per_class);
    read(d, "n_per_class_test", cfg.dataset.n_per_class_test);
    read(d, "classes", cfg.dataset.classes);
    read(d, "dim", cfg.dataset.dim);
    read(d, "spread", cfg.dataset.spread);
    std::string train_path, test_path;
    read(d, "train", train_path);
    read(d, "test", test_path);
    cfg.dataset.train_path = train_path;
    cfg.dataset.test_path = test_path;
    if (cfg.dataset.type != "blobs" && cfg.dataset.type != "csv") {
      throw ConfigError("dataset type '" + cfg.dataset.type + "' is not one of: blobs, csv");
    }
    if (cfg.dataset.type == "csv" && (train_path.empty() || test_path.empty())) {
      throw ConfigError("csv dataset needs 'train' and 'test' paths");
    }
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, "model", {"hidden", "dropout", "scheduler_hidden"});
    read(m, "hidden", cfg.hidden);
    read(m, "dropout", cfg.dropout);
    read(m, "scheduler_hidden", cfg.scheduler_hidden);
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train",
               {"epochs", "batch_size", "lr_theta", "milestones", "decay_factor", "lr_omega", "momentum",
                "weight_decay", "mc_passes", "eval_every", "checkpoint_every", "record_wall_time"});
    read(t, "epochs", cfg.train.epochs);
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "lr_theta", cfg.train.lr_theta);
    read(t, "milestones", cfg.train.milestones);
    read(t, "decay_factor", cfg.train.decay_factor);
    read(t, "lr_omega", cfg.train.lr_omega);
    read(t, "momentum", cfg.train.momentum);
    read(t, "weight_decay", cfg.train.weight_decay_theta);
    read(t, "mc_passes", cfg.train.mc_passes);
    read(t, "eval_every", cfg.train.eval_every);
    read(t, "checkpoint_every", cfg.train.checkpoint_every);
    read(t, "record_wall_time", cfg.train.record_wall_time);
  }

  read(j, "eps_min", cfg.schedule.eps_min);
  read(j, "lambda", cfg.schedule.lambda);
  if (j.contains("static_weights")) {
    std::vector<double> w;
    read(j, "static_weights", w);
    if (w.size() != 3) throw ConfigError("static_weights must hold exactly 3 values [w_g, w_H, w_u]");
    std::copy(w.begin(), w.end(), cfg.schedule.static_weights.begin());
  }

  auto read_attack = [](const json& a, AttackConfig& into) {
    read(a, "steps", into.steps);
    read(a, "alpha", into.alpha);
    read(a, "random_start", into.random_start);
  };
  if (j.contains("attack_train")) {
    check_keys(j.at("attack_train"), "attack_train", {"steps", "alpha", "random_start"});
    read_attack(j.at("attack_train"), cfg.attack_train);
  }
  if (j.contains("attack_eval")) {
    const json& a = j.at("attack_eval");
    check_keys(a, "attack_eval", {"steps", "alpha", "random_start", "budgets", "batch_size"});
    read_attack(a, cfg.eval.attack);
    read(a, "budgets", cfg.eval.budgets);
    read(a, "batch_size", cfg.eval.batch_size);
  }
  if (j.contains("domain")) {
    std::vector<double> dom;
    read(j, "domain", dom);
    if (dom.size() != 2 || !(dom[0] < dom[1])) throw ConfigError("domain must be [lo, hi] with lo < hi");
    cfg.attack_train.lo = cfg.eval.attack.lo = dom[0];
    cfg.attack_train.hi = cfg.eval.attack.hi = dom[1];
    cfg.schedule.domain_width = dom[1] - dom[0];
  }

  cfg.train.validate();
  cfg.schedule.validate();
  cfg.attack_train.validate();
  cfg.eval.attack.validate();
  if (cfg.modes.empty()) throw ConfigError("at least one mode is required");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  auto cfg = parse_config(j);
  // Relative CSV paths resolve against the config file's directory.
  for (auto* p : {&cfg.dataset.train_path, &cfg.dataset.test_path}) {
    if (!p->empty() && p->is_relative()) *p = path.parent_path() / *p;
  }
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json modes = json::array();
  for (auto m : cfg.modes) modes.push_back(to_string(m));
  json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["modes"] = modes;
  j["dataset"] = {{"type", cfg.dataset.type},
                  {"n_per_class", cfg.dataset.n_per_class},
                  {"n_per_class_test", cfg.dataset.n_per_class_test},
                  {"classes", cfg.dataset.classes},
                  {"dim", cfg.dataset.dim},
                  {"spread", cfg.dataset.spread}};
  if (cfg.dataset.type == "csv") {
    j["dataset"]["train"] = cfg.dataset.train_path.string();
    j["dataset"]["test"] = cfg.dataset.test_path.string();
  }
  j["model"] = {{"hidden", cfg.hidden}, {"dropout", cfg.dropout}, {"scheduler_hidden", cfg.scheduler_hidden}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"lr_theta", cfg.train.lr_theta},
                {"milestones", cfg.train.milestones},
                {"decay_factor", cfg.train.decay_factor},
                {"lr_omega", cfg.train.lr_omega},
                {"momentum", cfg.train.momentum},
                {"weight_decay", cfg.train.weight_decay_theta},
                {"mc_passes", cfg.train.mc_passes},
                {"eval_every", cfg.train.eval_every},
                {"checkpoint_every", cfg.train.checkpoint_every},
                {"record_wall_time", cfg.train.record_wall_time}};
  j["eps_min"] = cfg.schedule.eps_min;
  j["lambda"] = cfg.schedule.lambda;
  j["static_weights"] = cfg.schedule.static_weights;
  j["attack_train"] = {{"steps", cfg.attack_train.steps},
                       {"alpha", cfg.attack_train.alpha},
                       {"random_start", cfg.attack_train.random_start}};
  j["attack_eval"] = {{"steps", cfg.eval.attack.steps},
                      {"alpha", cfg.eval.attack.alpha},
                      {"random_start", cfg.eval.attack.random_start},
                      {"budgets", cfg.eval.budgets},
                      {"batch_size", cfg.eval.batch_size}};
  j["domain"] = {cfg.attack_train.lo, cfg.attack_train.hi};
  j["output_dir"] = cfg.output_dir.string();
  return j;
}

ExperimentData load_data(const ExperimentConfig& cfg) {
  const DatasetSpec& d = cfg.dataset;
  ExperimentData data;
  if (d.type == "csv") {
    data.train = load_csv_dataset(d.train_path, d.classes);
    data.test = load_csv_dataset(d.test_path, d.classes);
  } else {
    data.train = make_blobs(d.n_per_class, d.classes, d.dim, d.spread, SeededRng::stream(cfg.seed, "data", 0).next_u64(),
                            "train");
    data.test = make_blobs(d.n_per_class_test, d.classes, d.dim, d.spread,
                           SeededRng::stream(cfg.seed, "data", 1).next_u64(), "test");
  }
  data.train.validate();
  data.test.validate();
  return data;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRecord>& records,
                       std::size_t n_budgets) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,mode,train_loss,clean_acc";
  for (std::size_t k = 0; k < n_budgets; ++k) out << ",robust_acc_eps" << (k + 1);
  out << ",mean_eps,wall_ms\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  for (const auto& r : records) {
    out << r.epoch << ',' << r.mode << ',' << format_real(r.train_loss) << ',' << opt(r.clean_acc);
    for (std::size_t k = 0; k < n_budgets; ++k) out << ',' << (k < r.robust_acc.size() ? opt(r.robust_acc[k]) : "");
    out << ',' << format_real(r.mean_eps) << ',' << format_real(r.wall_ms) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
  const auto header = split_csv(line);
  if (header.size() < 6 || header[0] != "epoch" || header[1] != "mode" || header.back() != "wall_ms") {
    throw ParseError(path.string() + ": unexpected header '" + line + "'");
  }
  const std::size_t n_budgets = header.size() - 6;
  std::vector<MetricsRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return parse_real(s, path, line_no);
    };
    MetricsRecord r;
    r.epoch = static_cast<int>(parse_real(f[0], path, line_no));
    r.mode = f[1];
    r.train_loss = parse_real(f[2], path, line_no);
    r.clean_acc = opt(f[3]);
    for (std::size_t k = 0; k < n_budgets; ++k) r.robust_acc.push_back(opt(f[4 + k]));
    r.mean_eps = parse_real(f[4 + n_budgets], path, line_no);
    r.wall_ms = parse_real(f[5 + n_budgets], path, line_no);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ModeRun> run_experiment(const ExperimentConfig& cfg, const TrainHooks& hooks,
                                    const ResumePoint* resume) {
  if (resume != nullptr) {
    if (cfg.modes.size() != 1) throw ConfigError("resuming needs exactly one mode in the config");
    if (resume->start_epoch < 0 || resume->start_epoch > cfg.train.epochs) {
      throw ConfigError("start epoch " + std::to_string(resume->start_epoch) + " outside [0, " +
                        std::to_string(cfg.train.epochs) + "]");
    }
  }
  const ExperimentData data = load_data(cfg);
  std::vector<ModeRun> runs;
  std::set<TrainMode> seen;
  for (TrainMode mode : cfg.modes) {
    if (!seen.insert(mode).second) throw ConfigError("mode '" + to_string(mode) + "' listed twice");
    const std::filesystem::path dir = cfg.output_dir / to_string(mode);
    std::filesystem::create_directories(dir);

    TrainState state = initial_state(cfg.layer_sizes(), cfg.dropout, cfg.scheduler_hidden, cfg.seed);
    if (resume != nullptr) {
      load_checkpoint(resume->checkpoint, state.classifier.params(), state.scheduler.params());
      state.epoch = resume->start_epoch;
    }
    TrainInputs in{data.train, &data.test, cfg.train_config(mode), cfg.schedule_config(mode), cfg.attack_train,
                   cfg.eval};
    TrainHooks mode_hooks = hooks;
    if (mode_hooks.checkpoint_dir.empty()) mode_hooks.checkpoint_dir = dir;
    auto records = train(state, in, mode_hooks);

    write_metrics_csv(dir / "metrics.csv", records, cfg.eval.budgets.size());
    save_checkpoint(dir / "checkpoint.bin", state.classifier.params(), state.scheduler.params());
    ExperimentConfig snapshot = cfg;
    snapshot.modes = {mode};
    std::ofstream(dir / "config.json") << to_json(snapshot).dump(2) << '\n';
    runs.push_back({mode, dir, std::move(records), std::move(state)});
  }
  return runs;
}

}  // namespace ades
