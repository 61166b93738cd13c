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

// Desk-scale models. Every weight layer optionally carries a LayerQuantState;
// in codeq mode the forward pass routes the weights through quantize_layer.
// Biases are never quantized or pruned.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codeq/autodiff.hpp"
#include "codeq/quantizers.hpp"
#include "codeq/tensor.hpp"

namespace codeq {

enum class LayerKind : std::uint8_t { linear = 0, conv2d = 1 };

struct LayerSpec {
  LayerKind kind = LayerKind::linear;
  std::string name;
  // linear
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  // conv2d
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t out_h = 0;
  std::size_t out_w = 0;

  bool has_bias = true;
  bool relu = false;      // ReLU after the layer
  std::size_t pool = 0;   // max-pool window after the ReLU, 0 = none

  static LayerSpec linear(std::string name, std::size_t in, std::size_t out);
  /// Conv layer on an in_h x in_w input; output size is derived.
  static LayerSpec conv(std::string name, std::size_t in_channels, std::size_t out_channels,
                        std::size_t kernel, std::size_t in_h, std::size_t in_w,
                        std::size_t stride = 1, std::size_t padding = 0);

  Shape weight_shape() const;
  std::size_t weight_count() const;
  std::size_t bias_count() const;
  /// Per-sample output shape after ReLU and pooling.
  Shape output_shape() const;
  /// Throws ShapeError when the stored output size disagrees with the geometry.
  void validate() const;
};

struct ModelSpec {
  Shape input_shape;  // per sample: {features} or {channels, h, w}
  std::size_t num_classes = 0;
  std::vector<LayerSpec> layers;

  /// Checks that each layer's input matches the previous layer's output.
  void validate() const;
};

struct Layer {
  LayerSpec spec;
  Tensor weight;
  Tensor bias;
  std::optional<LayerQuantState> quant;  // nullopt: full precision
  std::optional<int> stored_bits;        // weights already sit on a b-bit grid
};

struct Model {
  ModelSpec spec;
  std::vector<Layer> layers;

  std::size_t weight_count() const;
  std::size_t parameter_count() const;  // weights + biases
  std::string summary() const;
};

Model build_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                std::size_t num_classes, std::uint64_t seed);

/// conv(16, 3x3) -> ReLU -> pool2 -> conv(32, 3x3) -> ReLU -> pool2 -> linear.
/// input is {1, 28, 28} or {3, 32, 32} (any C x H x W large enough works).
Model build_mini_cnn(const Shape& input, std::size_t num_classes, std::uint64_t seed);

enum class Precision { full, fixed_bit, mixed };

struct QuantConfig {
  Precision precision = Precision::fixed_bit;
  int bits = 4;
  double init_theta = 3.0;
  int b_min = 2;
  int b_max = 8;
  double quantile = 0.99;
  double epsilon = 1e-8;
  bool detach_scale_from_d = false;
};

/// Resets every layer's quantization state according to cfg.
void apply_quant_config(Model& model, const QuantConfig& cfg);

enum class ForwardMode { fp32, codeq };

struct LayerParams {
  ad::Var weight;
  ad::Var bias;  // invalid when the layer has no bias
  ad::Var theta_dz;
  std::optional<ad::Var> theta_bit;
};

struct ForwardResult {
  ad::Var logits;
  std::vector<LayerParams> params;
  std::vector<std::optional<QuantOutcome>> quant;  // set in codeq mode
};

/// batch is [B, ...] with per-sample size equal to the input shape's size.
/// With track_grad the weights, biases and theta values are gradient leaves.
ForwardResult forward(ad::Tape& tape, const Model& model, const Tensor& batch, ForwardMode mode,
                      bool track_grad = false);

}  // namespace codeq
