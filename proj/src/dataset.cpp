// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ades/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "ades/rng.hpp"

namespace ades {

void Dataset::validate() const {
  if (labels.empty()) throw ConfigError("empty dataset");
  if (features.rows() != labels.size()) throw DimensionError("feature rows and label count differ");
  for (double v : features.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("dataset features must lie in [0, 1]");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw IndexError("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = gather_rows(features, indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  out.num_classes = num_classes;
  out.split = split;
  return out;
}

std::vector<double> blob_center(std::size_t k, std::size_t num_classes, std::size_t dim) {
  std::vector<double> c(dim, 0.5);
  if (dim == 2) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(num_classes);
    c[0] += kBlobRadius * std::cos(angle);
    c[1] += kBlobRadius * std::sin(angle);
    return c;
  }
  if (dim < 64 && num_classes > (std::size_t{1} << dim)) {
    throw ConfigError("blobs: " + std::to_string(num_classes) + " classes do not fit the corners of a " +
                      std::to_string(dim) + "-cube");
  }
  for (std::size_t j = 0; j < dim; ++j) {
    const bool bit = j < 64 && ((k >> j) & 1u);
    c[j] += bit ? kBlobRadius : -kBlobRadius;
  }
  return c;
}

Dataset make_blobs(std::size_t n_per_class, std::size_t num_classes, std::size_t dim, double spread,
                   std::uint64_t seed, std::string split) {
  if (n_per_class == 0 || num_classes == 0 || dim == 0 || spread < 0.0) {
    throw ConfigError("blobs: n_per_class, classes and dim must be positive and spread >= 0");
  }
  SeededRng rng = SeededRng::stream(seed, "blobs");
  Dataset data;
  data.num_classes = num_classes;
  data.split = std::move(split);
  data.features = Tensor({n_per_class * num_classes, dim});
  data.labels.reserve(n_per_class * num_classes);
  std::size_t row = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    const auto center = blob_center(k, num_classes, dim);
    for (std::size_t n = 0; n < n_per_class; ++n, ++row) {
      for (std::size_t j = 0; j < dim; ++j) {
        data.features.at(row, j) = std::clamp(center[j] + spread * rng.normal(), 0.0, 1.0);
      }
      data.labels.push_back(static_cast<int>(k));
    }
  }
  return data;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) throw fail("expected feature columns followed by a label");
    const std::size_t d = fields.size() - 1;
    if (dim == 0) dim = d;
    if (d != dim) throw fail("expected " + std::to_string(dim + 1) + " columns, found " + std::to_string(d + 1));
    for (std::size_t j = 0; j < d; ++j) {
      const auto f = trim(fields[j]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) throw fail("bad number '" + std::string(f) + "'");
      if (!(v >= 0.0 && v <= 1.0)) throw fail("feature " + std::string(f) + " outside [0, 1]");
      features.push_back(v);
    }
    const auto lf = trim(fields.back());
    int y = 0;
    auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), y);
    if (ec != std::errc() || ptr != lf.data() + lf.size()) throw fail("bad label '" + std::string(lf) + "'");
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw IndexError(path.string() + ":" + std::to_string(line_no) + ": label " + std::to_string(y) +
                       " outside [0, " + std::to_string(num_classes) + ")");
    }
    labels.push_back(y);
  }
  if (labels.empty()) throw ParseError(path.string() + ": empty dataset");
  Dataset data;
  data.features = Tensor({labels.size(), dim}, std::move(features));
  data.labels = std::move(labels);
  data.num_classes = num_classes;
  data.split = path.stem().string();
  return data;
}

void write_csv_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[32];
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.features.row_span(r)) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    out << data.labels[r] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ades
