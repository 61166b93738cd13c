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

// Weight quantizers.
//
// The dead-zone quantizer maps every weight with |w| <= d/2 to zero and puts
// the remaining weights on a uniform grid of step s offset by
// delta = d/2 - s/2:
//
//     w_bar = clip(round(sign(w) * relu(|w| - delta) / s), -Q, Q)
//     w_hat = sign(w_bar) * delta + s * w_bar,        Q = 2^(b-1) - 1
//
// With d = s it is exactly the mid-tread uniform quantizer. The dead-zone
// width is learned through d = 2R(1 - tanh|theta_dz|), and the step follows
// the pruning-aware rule s = (R - d/2) / (Q - 1/2) + eps so the outermost
// level stays at R for every d. In mixed-precision mode Q is driven by a
// learned bit-width b = round(tanh|theta_bit| (b_max - b_min) + b_min).
//
// Gradients: round, relu and clip are straight-through, sign passes no
// gradient, and the range statistic R is gradient-stopped. The composite
// derivative of w_hat with respect to w is exactly 1.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "codeq/autodiff.hpp"

namespace codeq {

/// Q_b = 2^(b-1) - 1. Throws DomainError for b outside [2, 31].
int max_index(int bits);

/// Per-layer compression parameters. Exactly one of fixed_bits / theta_bit
/// is set: fixed-bit mode or mixed-precision mode.
struct LayerQuantState {
  double theta_dz = 3.0;
  std::optional<double> theta_bit;
  std::optional<int> fixed_bits;
  int b_min = 2;
  int b_max = 8;
  double quantile = 0.99;
  double epsilon = 1e-8;
  // Treat d as a constant inside the pruning-aware scale (ablation switch).
  bool detach_scale_from_d = false;

  bool mixed_precision() const noexcept { return theta_bit.has_value(); }
  void validate() const;

  static LayerQuantState fixed(int bits, double theta_dz = 3.0);
  static LayerQuantState mixed(double theta_bit, double theta_dz = 3.0, int b_min = 2,
                               int b_max = 8);
};

enum class ClipRule {
  straight_through,  // identity backward everywhere
  masked,            // gradient only where |w/s| <= Q
};

struct QuantOutcome {
  ad::Var w_hat;
  std::vector<std::int32_t> w_bar;
  ad::Var scale;
  ad::Var deadzone;
  ad::Var offset;  // delta
  int bits = 0;
  double range_stat = 0.0;
  std::optional<ad::Var> bits_continuous;

  double scale_value() const { return scale.item(); }
  double deadzone_value() const { return deadzone.item(); }
  double offset_value() const { return offset.item(); }
};

/// Nearest-rank quantile of |w|: element ceil(q n) - 1 of the sorted
/// magnitudes. q = 1 gives max |w|.
double magnitude_quantile(std::span<const double> w, double quantile);

/// magnitude_quantile as a gradient-stopped scalar node.
ad::Var range_stat(ad::Var w, double quantile);

/// R / Q_b.
double absmax_scale(double range, int bits);

/// Mid-tread uniform symmetric quantizer with step s.
QuantOutcome uniform_quantize(ad::Var w, double scale, int bits,
                              ClipRule clip = ClipRule::masked);

/// (R - d/2) / (Q_b - 1/2) + eps. Requires 0 <= d <= 2R.
double pruning_aware_scale(double range, double deadzone, int bits, double eps);
ad::Var pruning_aware_scale(ad::Var range, ad::Var deadzone, int bits, double eps);

/// Solves d = pruning_aware_scale(R, d, b, 0) by bisection. The root is the
/// absmax step R / Q_b; exposed as a diagnostic.
double absmax_recovery_fixed_point(double range, int bits);

QuantOutcome deadzone_quantize(ad::Var w, ad::Var scale, ad::Var deadzone, int bits);

/// 2R (1 - tanh|theta_dz|).
ad::Var deadzone_width(ad::Var theta_dz, ad::Var range);

struct LearnedBits {
  int bits = 0;
  ad::Var continuous;  // tanh|theta| (b_max - b_min) + b_min
  ad::Var rounded;     // ste_round(continuous)
};

LearnedBits learnable_bit(ad::Var theta_bit, int b_min, int b_max);

struct LearnedScale {
  ad::Var scale;
  LearnedBits bits;
};

/// Pruning-aware scale with Q driven by the learned bit-width.
LearnedScale learnable_scale(ad::Var theta_bit, ad::Var deadzone, ad::Var range, double eps,
                             int b_min, int b_max);

/// Range statistic -> dead-zone width -> scale -> dead-zone quantizer for one
/// weight tensor. theta_bit must be given iff the state is mixed precision.
QuantOutcome quantize_layer(ad::Var w, ad::Var theta_dz, std::optional<ad::Var> theta_bit,
                            const LayerQuantState& state);
/// Same, with the state's theta values as constants on w's tape.
QuantOutcome quantize_layer(ad::Var w, const LayerQuantState& state);

}  // namespace codeq
