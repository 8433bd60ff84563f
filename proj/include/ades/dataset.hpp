// Copyright 2026 The ADES Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ades/tensor.hpp"

namespace ades {

struct Dataset {
  Tensor features;  // N x d, every entry in [0, 1]
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::string split;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Centre of class k: on a circle of radius kBlobRadius around (0.5, 0.5)
/// for d == 2, otherwise a hypercube corner at {0.5 +- kBlobRadius}^d.
inline constexpr double kBlobRadius = 0.15;
std::vector<double> blob_center(std::size_t k, std::size_t num_classes, std::size_t dim);

/// Isotropic Gaussian clusters clipped to [0, 1], class-major order.
Dataset make_blobs(std::size_t n_per_class, std::size_t num_classes, std::size_t dim, double spread,
                   std::uint64_t seed, std::string split = "train");

/// Rows of d features followed by one integer label.
Dataset load_csv_dataset(const std::filesystem::path& path, std::size_t num_classes);
void write_csv_dataset(const std::filesystem::path& path, const Dataset& data);

}  // namespace ades
