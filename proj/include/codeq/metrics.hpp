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

// Compression accounting. BOPs_l = density_l * MACs_l * w_bits * a_bits with
// a_bits = 32; the baseline is every layer dense at 32-bit weights. Biases
// are excluded everywhere.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codeq/models.hpp"

namespace codeq {

inline constexpr int kActivationBits = 32;

/// conv: c_in c_out k_h k_w m_h m_w; linear: in * out.
std::uint64_t macs_dense(const LayerSpec& spec);

/// density * macs_dense * w_bits * a_bits. DomainError when density is
/// outside [0, 1] or a bit-width is < 1.
double bops_layer(const LayerSpec& spec, double density, int w_bits, int a_bits = kActivationBits);

struct LayerRecord {
  std::string name;
  std::string kind;
  std::size_t params = 0;
  std::size_t zeros = 0;
  double density = 1.0;
  int bits = 32;
  std::optional<double> deadzone;
  std::optional<double> scale;
  std::optional<double> theta_dz;
  std::optional<double> theta_bit;
  std::uint64_t macs_dense = 0;
  double macs_unstructured = 0.0;
  double bops = 0.0;
  double baseline_bops = 0.0;
};

struct CompressionReport {
  std::vector<LayerRecord> layers;
  double model_bops = 0.0;
  double baseline_bops = 0.0;
  double relative_bops = 0.0;  // fraction in (0, 1], not percent
  double overall_sparsity = 0.0;
  double mean_bits = 0.0;      // unweighted mean over layers
  std::optional<double> accuracy;
};

/// Densities come from the actual reconstructed weights: quantize_layer for
/// layers with a quant state, the stored weights otherwise. Bits are the
/// fixed or learned width, the stored width of pre-quantized weights, or 32.
/// DomainError for a model without layers.
CompressionReport build_report(const Model& model, std::optional<double> accuracy = std::nullopt);

}  // namespace codeq
