// Copyright 2026 The codeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codeq/tensor.hpp"

namespace codeq {

inline constexpr double kMnistMean = 0.1307;
inline constexpr double kMnistStd = 0.3081;

struct Dataset {
  Tensor features;  // [n, sample_shape...]
  std::vector<int> labels;
  std::size_t num_classes = 0;
  Shape sample_shape;
  // Applied at load: x = (raw - norm_mean) / norm_std.
  double norm_mean = 0.0;
  double norm_std = 1.0;
  // Statistics of the raw features before normalization.
  double raw_mean = 0.0;
  double raw_std = 0.0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t sample_size() const { return numel(sample_shape); }
  /// Throws DomainError when a label is out of range or a feature is not finite.
  void validate() const;
};

/// MNIST-style IDX pair (0x00000803 images, 0x00000801 labels, big-endian).
/// Pixels are scaled to [0, 1] and standardized with the MNIST constants.
/// limit > 0 keeps only the first `limit` samples.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit = 0);

void write_idx_images(const std::string& path, std::size_t rows, std::size_t cols,
                      const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

/// label,feature,feature,... with an optional header row (detected by a
/// non-numeric first cell). Features are used as is.
Dataset load_csv(const std::string& path);

/// Gaussian clusters around centers drawn uniformly from [-1, 1]^dims, each
/// resampled (up to 256 draws) until it lies 6 * spread from earlier centers.
Dataset synthetic_blobs(std::size_t n, std::size_t dims, std::size_t classes, double spread,
                        std::uint64_t seed);

Dataset subset(const Dataset& d, const std::vector<std::size_t>& indices);

/// First n - n_val samples for training, the rest for validation.
std::pair<Dataset, Dataset> split_tail(const Dataset& d, std::size_t n_val);

struct Batch {
  Tensor features;
  std::vector<int> labels;
};

/// Index lists for one epoch: shuffled with shuffle_seed (insertion order
/// when absent); the last short batch is kept.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::optional<std::uint64_t> shuffle_seed);

Batch gather(const Dataset& d, const std::vector<std::size_t>& indices);

}  // namespace codeq
