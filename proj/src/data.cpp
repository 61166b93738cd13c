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

#include "codeq/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "byte_io.hpp"
#include "codeq/error.hpp"

namespace codeq {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

void fill_raw_stats(Dataset& d, const std::vector<double>& raw) {
  if (raw.empty()) return;
  double sum = 0.0;
  for (double v : raw) sum += v;
  d.raw_mean = sum / static_cast<double>(raw.size());
  double sq = 0.0;
  for (double v : raw) sq += (v - d.raw_mean) * (v - d.raw_mean);
  d.raw_std = std::sqrt(sq / static_cast<double>(raw.size()));
}

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                       : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

void Dataset::validate() const {
  if (features.size() != labels.size() * sample_size()) {
    throw ShapeError("dataset features " + to_string(features.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels of shape " + to_string(sample_shape));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DomainError("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  for (double v : features.values()) {
    if (!std::isfinite(v)) throw DomainError("non-finite feature value");
  }
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::size_t limit) {
  const auto img_bytes = detail::read_file(images_path);
  const auto lab_bytes = detail::read_file(labels_path);
  detail::ByteReader img(img_bytes, images_path, /*big_endian=*/true);
  detail::ByteReader lab(lab_bytes, labels_path, /*big_endian=*/true);

  const std::uint32_t im = img.u32();
  if (im != kImagesMagic) {
    throw FormatError(images_path + ": bad IDX image magic " + hex(im) + " (expected " +
                      hex(kImagesMagic) + ")");
  }
  const std::uint32_t lm = lab.u32();
  if (lm != kLabelsMagic) {
    throw FormatError(labels_path + ": bad IDX label magic " + hex(lm) + " (expected " +
                      hex(kLabelsMagic) + ")");
  }
  std::size_t n = img.u32();
  const std::size_t rows = img.u32();
  const std::size_t cols = img.u32();
  const std::size_t n_labels = lab.u32();
  if (n != n_labels) {
    throw FormatError("IDX image count " + std::to_string(n) + " != label count " +
                      std::to_string(n_labels));
  }
  if (limit > 0) n = std::min(n, limit);
  const auto pixels = img.take(n * rows * cols);
  const auto raw_labels = lab.take(n);

  Dataset d;
  d.sample_shape = {1, rows, cols};
  d.norm_mean = kMnistMean;
  d.norm_std = kMnistStd;
  std::vector<double> raw(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) raw[i] = pixels[i] / 255.0;
  fill_raw_stats(d, raw);
  d.features = Tensor({n, 1, rows, cols});
  for (std::size_t i = 0; i < raw.size(); ++i) d.features[i] = (raw[i] - kMnistMean) / kMnistStd;
  int max_label = 0;
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.labels[i] = raw_labels[i];
    max_label = std::max(max_label, d.labels[i]);
  }
  d.num_classes = std::max<std::size_t>(10, static_cast<std::size_t>(max_label) + 1);
  return d;
}

void write_idx_images(const std::string& path, std::size_t rows, std::size_t cols,
                      const std::vector<std::uint8_t>& pixels) {
  if (rows == 0 || cols == 0 || pixels.size() % (rows * cols) != 0) {
    throw ShapeError("IDX images: pixel count not a multiple of rows * cols");
  }
  std::vector<std::uint8_t> out;
  auto be32 = [&](std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  be32(kImagesMagic);
  be32(static_cast<std::uint32_t>(pixels.size() / (rows * cols)));
  be32(static_cast<std::uint32_t>(rows));
  be32(static_cast<std::uint32_t>(cols));
  out.insert(out.end(), pixels.begin(), pixels.end());
  detail::write_file(path, out);
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out;
  auto be32 = [&](std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  be32(kLabelsMagic);
  be32(static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  detail::write_file(path, out);
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t dims = 0;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_commas(line);
    const auto label = parse_number(cells[0]);
    if (first && !label) {  // header row
      first = false;
      continue;
    }
    first = false;
    if (!label || *label != std::floor(*label) || *label < 0) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": label must be a non-negative integer");
    }
    if (cells.size() < 2) throw FormatError(path + ":" + std::to_string(line_no) + ": no features");
    if (dims == 0) dims = cells.size() - 1;
    if (cells.size() - 1 != dims) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dims) +
                        " features, got " + std::to_string(cells.size() - 1));
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": column " + std::to_string(c + 1) +
                          " is not a number");
      }
      values.push_back(*v);
    }
    labels.push_back(static_cast<int>(*label));
  }
  if (labels.empty()) throw FormatError(path + ": no data rows");
  Dataset d;
  d.sample_shape = {dims};
  fill_raw_stats(d, values);
  d.features = Tensor({labels.size(), dims}, std::move(values));
  d.num_classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  d.labels = std::move(labels);
  d.validate();
  return d;
}

Dataset synthetic_blobs(std::size_t n, std::size_t dims, std::size_t classes, double spread,
                        std::uint64_t seed) {
  if (n == 0 || dims == 0 || classes == 0) throw DomainError("synthetic_blobs sizes must be positive");
  if (!(spread >= 0.0)) throw DomainError("synthetic_blobs spread must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  // Rejection-sample each center until it is 6 spreads from the earlier ones;
  // when the box is too crowded, keep the farthest of the candidates.
  const double min_dist = 6.0 * spread;
  std::vector<double> centers(classes * dims);
  std::vector<double> cand(dims), best(dims);
  for (std::size_t c = 0; c < classes; ++c) {
    double best_gap = -1.0;
    for (int attempt = 0; attempt < 256 && best_gap < min_dist; ++attempt) {
      for (double& v : cand) v = u(rng);
      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t o = 0; o < c; ++o) {
        double sq = 0.0;
        for (std::size_t j = 0; j < dims; ++j) sq += (cand[j] - centers[o * dims + j]) * (cand[j] - centers[o * dims + j]);
        gap = std::min(gap, std::sqrt(sq));
      }
      if (gap > best_gap) {
        best_gap = gap;
        best = cand;
      }
    }
    std::copy(best.begin(), best.end(), centers.begin() + static_cast<std::ptrdiff_t>(c * dims));
  }
  Dataset d;
  d.sample_shape = {dims};
  d.num_classes = classes;
  d.features = Tensor({n, dims});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % classes;
    d.labels[i] = static_cast<int>(y);
    for (std::size_t j = 0; j < dims; ++j) {
      d.features[i * dims + j] = centers[y * dims + j] + spread * g(rng);
    }
  }
  fill_raw_stats(d, d.features.values());
  return d;
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& indices) {
  Dataset out = d;
  const Batch b = gather(d, indices);
  out.features = b.features;
  out.labels = b.labels;
  return out;
}

std::pair<Dataset, Dataset> split_tail(const Dataset& d, std::size_t n_val) {
  if (n_val >= d.size()) throw DomainError("validation split leaves no training data");
  std::vector<std::size_t> train(d.size() - n_val), val(n_val);
  std::iota(train.begin(), train.end(), 0);
  std::iota(val.begin(), val.end(), d.size() - n_val);
  return {subset(d, train), subset(d, val)};
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::optional<std::uint64_t> shuffle_seed) {
  if (batch_size == 0) throw DomainError("batch size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

Batch gather(const Dataset& d, const std::vector<std::size_t>& indices) {
  const std::size_t per = d.sample_size();
  Shape shape = {indices.size()};
  shape.insert(shape.end(), d.sample_shape.begin(), d.sample_shape.end());
  Batch b;
  b.features = Tensor(shape);
  b.labels.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= d.size()) throw DomainError("sample index out of range");
    std::copy_n(d.features.values().begin() + static_cast<std::ptrdiff_t>(i * per), per,
                b.features.values().begin() + static_cast<std::ptrdiff_t>(k * per));
    b.labels[k] = d.labels[i];
  }
  return b;
}

}  // namespace codeq
