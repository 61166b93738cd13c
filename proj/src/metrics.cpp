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

#include "codeq/metrics.hpp"

#include <algorithm>
#include <string>

#include "codeq/error.hpp"

namespace codeq {

std::uint64_t macs_dense(const LayerSpec& spec) {
  if (spec.kind == LayerKind::linear) {
    return static_cast<std::uint64_t>(spec.in_features) * spec.out_features;
  }
  return static_cast<std::uint64_t>(spec.in_channels) * spec.out_channels * spec.kernel_h *
         spec.kernel_w * spec.out_h * spec.out_w;
}

double bops_layer(const LayerSpec& spec, double density, int w_bits, int a_bits) {
  if (!(density >= 0.0 && density <= 1.0)) {
    throw DomainError("density must be in [0, 1], got " + std::to_string(density));
  }
  if (w_bits < 1 || a_bits < 1) throw DomainError("bit-widths must be >= 1");
  return density * static_cast<double>(macs_dense(spec)) * w_bits * a_bits;
}

CompressionReport build_report(const Model& model, std::optional<double> accuracy) {
  if (model.layers.empty()) throw DomainError("cannot report on a model without layers");
  CompressionReport rep;
  rep.accuracy = accuracy;
  std::size_t zeros = 0, total = 0;
  double bit_sum = 0.0;
  for (const auto& layer : model.layers) {
    LayerRecord r;
    r.name = layer.spec.name;
    r.kind = layer.spec.kind == LayerKind::linear ? "linear" : "conv2d";
    r.params = layer.spec.weight_count();
    std::vector<double> effective;
    if (layer.quant) {
      ad::Tape tape;
      const QuantOutcome q = quantize_layer(tape.constant(layer.weight), *layer.quant);
      effective = q.w_hat.value();
      r.bits = q.bits;
      r.deadzone = q.deadzone_value();
      r.scale = q.scale_value();
      r.theta_dz = layer.quant->theta_dz;
      r.theta_bit = layer.quant->theta_bit;
    } else {
      effective = layer.weight.values();
      r.bits = layer.stored_bits.value_or(32);
    }
    r.zeros = static_cast<std::size_t>(std::count(effective.begin(), effective.end(), 0.0));
    r.density = r.params == 0 ? 0.0 : 1.0 - static_cast<double>(r.zeros) / static_cast<double>(r.params);
    r.macs_dense = macs_dense(layer.spec);
    r.macs_unstructured = r.density * static_cast<double>(r.macs_dense);
    r.bops = bops_layer(layer.spec, r.density, r.bits);
    r.baseline_bops = bops_layer(layer.spec, 1.0, 32);
    rep.model_bops += r.bops;
    rep.baseline_bops += r.baseline_bops;
    zeros += r.zeros;
    total += r.params;
    bit_sum += r.bits;
    rep.layers.push_back(std::move(r));
  }
  if (rep.baseline_bops <= 0.0) throw DomainError("model has no multiply-accumulates");
  rep.relative_bops = rep.model_bops / rep.baseline_bops;
  rep.overall_sparsity = static_cast<double>(zeros) / static_cast<double>(total);
  rep.mean_bits = bit_sum / static_cast<double>(rep.layers.size());
  return rep;
}

}  // namespace codeq
