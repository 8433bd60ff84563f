// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ades/models.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ades {

void ParamSet::add(std::string name, Tensor value) {
  Tensor momentum(value.shape());
  params_.push_back({std::move(name), std::move(value), std::move(momentum)});
}

std::vector<Tensor> ParamSet::values() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Var> ParamSet::bind(Graph& g, bool requires_grad) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) vars.push_back(g.leaf(p.value, requires_grad));
  return vars;
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, SeededRng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w({fan_in, fan_out});
  for (double& v : w.data()) v = rng.uniform(-limit, limit);
  return w;
}

MlpClassifier::MlpClassifier(std::vector<std::size_t> layer_sizes, double dropout_rate, std::uint64_t seed)
    : layers_(std::move(layer_sizes)), dropout_(dropout_rate) {
  if (layers_.size() < 2) throw ConfigError("classifier needs at least an input and an output width");
  for (auto w : layers_) {
    if (w == 0) throw ConfigError("classifier layer widths must be positive");
  }
  if (!(dropout_ >= 0.0 && dropout_ < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
  SeededRng rng = SeededRng::stream(seed, "init-classifier");
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    params_.add("clf.W" + std::to_string(l), glorot_uniform(layers_[l], layers_[l + 1], rng));
    params_.add("clf.b" + std::to_string(l), Tensor({1, layers_[l + 1]}));
  }
}

Var MlpClassifier::forward(Graph&, std::span<const Var> bound, Var x, Mode mode, SeededRng& rng) const {
  if (x.value().rank() != 2 || x.value().cols() != input_dim()) {
    throw DimensionError("classifier expects input width " + std::to_string(input_dim()) + ", got " +
                         shape_string(x.value().shape()));
  }
  const std::size_t n_layers = layers_.size() - 1;
  Var h = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    h = add_bias(matmul(h, bound[2 * l]), bound[2 * l + 1]);
    if (l + 1 < n_layers) {
      h = relu(h);
      h = dropout(h, dropout_, mode, rng);
    }
  }
  return h;
}

Var MlpClassifier::forward(Graph& g, Var x, Mode mode, SeededRng& rng) const {
  const auto bound = params_.bind(g, false);
  return forward(g, bound, x, mode, rng);
}

Tensor MlpClassifier::logits(const Tensor& x) const {
  Graph g;
  SeededRng unused(0);
  return forward(g, g.constant(x), Mode::kEval, unused).value();
}

SchedulerNet::SchedulerNet(std::size_t hidden, std::uint64_t seed) : hidden_(hidden) {
  if (hidden_ == 0) throw ConfigError("scheduler hidden width must be positive");
  SeededRng rng = SeededRng::stream(seed, "init-scheduler");
  params_.add("sched.W0", glorot_uniform(kInputWidth, hidden_, rng));
  params_.add("sched.b0", Tensor({1, hidden_}));
  params_.add("sched.W1", glorot_uniform(hidden_, 1, rng));
  params_.add("sched.b1", Tensor({1, 1}));
}

Var SchedulerNet::forward(Graph&, std::span<const Var> bound, Var z) const {
  if (z.value().rank() != 2 || z.value().cols() != kInputWidth) {
    throw DimensionError("scheduler expects B x 3 cues, got " + shape_string(z.value().shape()));
  }
  Var h = relu(add_bias(matmul(z, bound[0]), bound[1]));
  return sigmoid(add_bias(matmul(h, bound[2]), bound[3]));
}

Tensor SchedulerNet::sigma(const Tensor& z) const {
  Graph g;
  const auto bound = params_.bind(g, false);
  return forward(g, bound, g.constant(z)).value();
}

// ---- checkpoint I/O ----

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_record(std::ostream& os, const std::string& name, const Tensor& t) {
  put_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) put_u64(os, d);
  for (double v : t.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  Reader(std::vector<unsigned char> bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint64_t uint(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += width;
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError(path_ + ": corrupt checkpoint (" + what + ") at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated");
  }

  std::vector<unsigned char> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

void read_record(Reader& r, const std::string& expected_name, Tensor& into) {
  const auto name_len = r.uint(4);
  const std::string name = r.bytes(name_len);
  if (name != expected_name) r.fail("expected record '" + expected_name + "', found '" + name + "'");
  const auto rank = r.uint(4);
  Shape shape;
  for (std::uint64_t i = 0; i < rank; ++i) shape.push_back(r.uint(8));
  if (shape != into.shape()) {
    r.fail("shape of '" + name + "' is " + shape_string(shape) + ", model expects " + shape_string(into.shape()));
  }
  for (double& v : into.data()) v = std::bit_cast<double>(r.uint(8));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamSet& classifier, const ParamSet& scheduler) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(os, kCheckpointVersion);
  for (const ParamSet* set : {&classifier, &scheduler}) {
    for (const auto& p : *set) put_record(os, p.name, p.value);
  }
  for (const ParamSet* set : {&classifier, &scheduler}) {
    for (const auto& p : *set) put_record(os, "momentum/" + p.name, p.momentum);
  }
  if (!os) throw IoError("write failed for " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, ParamSet& classifier, ParamSet& scheduler) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path.string());
  if (r.bytes(sizeof(kCheckpointMagic)) != std::string(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    r.fail("bad magic");
  }
  const auto version = r.uint(4);
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));
  // Parse into copies so a failed load leaves the caller's state untouched.
  ParamSet clf = classifier, sched = scheduler;
  for (ParamSet* set : {&clf, &sched}) {
    for (auto& p : *set) read_record(r, p.name, p.value);
  }
  for (ParamSet* set : {&clf, &sched}) {
    for (auto& p : *set) read_record(r, "momentum/" + p.name, p.momentum);
  }
  if (!r.done()) r.fail("trailing bytes");
  classifier = std::move(clf);
  scheduler = std::move(sched);
}

}  // namespace ades
