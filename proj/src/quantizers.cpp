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

#include "codeq/quantizers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "codeq/error.hpp"

namespace codeq {

namespace {

std::vector<std::int32_t> to_indices(const std::vector<double>& v) {
  std::vector<std::int32_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<std::int32_t>(v[i]);
  return out;
}

void check_range_and_deadzone(double range, double deadzone) {
  if (!(range >= 0.0) || !std::isfinite(range)) {
    throw DomainError("range statistic must be finite and >= 0, got " + std::to_string(range));
  }
  if (!(deadzone >= 0.0) || deadzone > 2.0 * range) {
    throw DomainError("dead-zone width " + std::to_string(deadzone) + " outside [0, 2R] with R = " +
                      std::to_string(range));
  }
}

}  // namespace

int max_index(int bits) {
  if (bits < 2 || bits > 31) {
    throw DomainError("bit-width must be in [2, 31], got " + std::to_string(bits));
  }
  return static_cast<int>((1u << (bits - 1)) - 1u);
}

void LayerQuantState::validate() const {
  if (fixed_bits.has_value() == theta_bit.has_value()) {
    throw DomainError("exactly one of fixed_bits / theta_bit must be set");
  }
  if (fixed_bits && (*fixed_bits < 2 || *fixed_bits > 16)) {
    throw DomainError("fixed_bits must be in [2, 16], got " + std::to_string(*fixed_bits));
  }
  if (b_min < 2 || b_max > 16 || b_min > b_max) {
    throw DomainError("bit bounds must satisfy 2 <= b_min <= b_max <= 16");
  }
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0");
  if (!(quantile > 0.0 && quantile <= 1.0)) throw DomainError("quantile must be in (0, 1]");
  if (!std::isfinite(theta_dz) || (theta_bit && !std::isfinite(*theta_bit))) {
    throw DomainError("theta parameters must be finite");
  }
}

LayerQuantState LayerQuantState::fixed(int bits, double theta_dz) {
  LayerQuantState s;
  s.fixed_bits = bits;
  s.theta_dz = theta_dz;
  return s;
}

LayerQuantState LayerQuantState::mixed(double theta_bit, double theta_dz, int b_min, int b_max) {
  LayerQuantState s;
  s.theta_bit = theta_bit;
  s.theta_dz = theta_dz;
  s.b_min = b_min;
  s.b_max = b_max;
  return s;
}

double magnitude_quantile(std::span<const double> w, double quantile) {
  if (w.empty()) throw DomainError("range statistic of an empty tensor");
  if (!(quantile > 0.0 && quantile <= 1.0)) throw DomainError("quantile must be in (0, 1]");
  std::vector<double> mag(w.size());
  std::transform(w.begin(), w.end(), mag.begin(), [](double v) { return std::fabs(v); });
  const double n = static_cast<double>(mag.size());
  const double t = quantile * n;
  // q*n that is an integer up to representation error counts as that integer.
  const double nearest = std::round(t);
  const double rank = std::fabs(t - nearest) <= 1e-9 * std::max(1.0, t) ? nearest : std::ceil(t);
  const std::size_t idx =
      std::min(mag.size() - 1, static_cast<std::size_t>(std::max(1.0, rank)) - 1);
  std::nth_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(idx), mag.end());
  return mag[idx];
}

ad::Var range_stat(ad::Var w, double quantile) {
  const double r = magnitude_quantile(w.value(), quantile);
  return ad::stop_gradient(w.tape()->scalar(r));
}

double absmax_scale(double range, int bits) {
  const int q = max_index(bits);
  if (!(range >= 0.0)) throw DomainError("range statistic must be >= 0");
  return range / static_cast<double>(q);
}

QuantOutcome uniform_quantize(ad::Var w, double scale, int bits, ClipRule clip) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("scale must be finite and > 0, got " + std::to_string(scale));
  }
  const double q = max_index(bits);
  ad::Tape& tape = *w.tape();
  ad::Var s = tape.scalar(scale);
  ad::Var ratio = ad::div(w, s);
  // Clipping to integer bounds commutes with rounding; clipping first makes
  // the masked rule test |w/s| <= Q on the unrounded ratio.
  ad::Var clipped = clip == ClipRule::masked ? ad::masked_clip(ratio, -q, q)
                                             : ad::ste_clip(ratio, -q, q);
  ad::Var w_bar = ad::ste_round(clipped);
  QuantOutcome out;
  out.w_hat = ad::mul(s, w_bar);
  out.w_bar = to_indices(w_bar.value());
  out.scale = s;
  out.deadzone = s;
  out.offset = tape.scalar(0.0);
  out.bits = bits;
  out.range_stat = scale * q;
  return out;
}

double pruning_aware_scale(double range, double deadzone, int bits, double eps) {
  check_range_and_deadzone(range, deadzone);
  const double q = max_index(bits);
  return (range - deadzone / 2.0) / (q - 0.5) + eps;
}

ad::Var pruning_aware_scale(ad::Var range, ad::Var deadzone, int bits, double eps) {
  check_range_and_deadzone(range.item(), deadzone.item());
  const double q = max_index(bits);
  ad::Var usable = ad::sub(range, ad::scale(deadzone, 0.5));
  return ad::add_scalar(ad::div(usable, range.tape()->scalar(q - 0.5)), eps);
}

double absmax_recovery_fixed_point(double range, int bits) {
  if (!(range > 0.0)) throw DomainError("fixed point needs R > 0");
  // f(d) = d - s(d) is strictly increasing, f(0) < 0 < f(2R).
  double lo = 0.0;
  double hi = 2.0 * range;
  for (int it = 0; it < 2000; ++it) {
    const double mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    if (mid - pruning_aware_scale(range, mid, bits, 0.0) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double f_lo = std::fabs(lo - pruning_aware_scale(range, lo, bits, 0.0));
  const double f_hi = std::fabs(hi - pruning_aware_scale(range, hi, bits, 0.0));
  return f_lo <= f_hi ? lo : hi;
}

QuantOutcome deadzone_quantize(ad::Var w, ad::Var scale, ad::Var deadzone, int bits) {
  const double s = scale.item();
  const double d = deadzone.item();
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw DomainError("scale must be finite and > 0, got " + std::to_string(s));
  }
  if (!(d >= 0.0) || !std::isfinite(d)) {
    throw DomainError("dead-zone width must be finite and >= 0, got " + std::to_string(d));
  }
  const double q = max_index(bits);

  ad::Var shifted = ad::shift_by_halfwidths(ad::abs(w), deadzone, scale);  // |w| - delta
  ad::Var signed_mag = ad::mul(ad::zero_grad_sign(w), ad::ste_relu(shifted));
  ad::Var w_bar = ad::ste_clip(ad::ste_round(ad::div(signed_mag, scale)), -q, q);
  ad::Var delta = ad::sub(ad::scale(deadzone, 0.5), ad::scale(scale, 0.5));
  ad::Var w_hat = ad::add(ad::mul(ad::zero_grad_sign(w_bar), delta), ad::mul(scale, w_bar));

  QuantOutcome out;
  out.w_hat = w_hat;
  out.w_bar = to_indices(w_bar.value());
  out.scale = scale;
  out.deadzone = deadzone;
  out.offset = delta;
  out.bits = bits;
  return out;
}

ad::Var deadzone_width(ad::Var theta_dz, ad::Var range) {
  if (!(range.item() >= 0.0)) throw DomainError("range statistic must be >= 0");
  ad::Var keep = ad::add_scalar(ad::neg(ad::tanh(ad::abs(theta_dz))), 1.0);
  return ad::mul(ad::scale(range, 2.0), keep);
}

LearnedBits learnable_bit(ad::Var theta_bit, int b_min, int b_max) {
  if (b_min > b_max) throw DomainError("b_min must not exceed b_max");
  if (b_min < 2) throw DomainError("b_min must be >= 2");
  LearnedBits out;
  out.continuous = ad::add_scalar(
      ad::scale(ad::tanh(ad::abs(theta_bit)), static_cast<double>(b_max - b_min)), b_min);
  out.rounded = ad::ste_round(out.continuous);
  out.bits = std::clamp(static_cast<int>(out.rounded.item()), b_min, b_max);
  return out;
}

LearnedScale learnable_scale(ad::Var theta_bit, ad::Var deadzone, ad::Var range, double eps,
                             int b_min, int b_max) {
  check_range_and_deadzone(range.item(), deadzone.item());
  LearnedScale out;
  out.bits = learnable_bit(theta_bit, b_min, b_max);
  ad::Var q = ad::add_scalar(ad::pow2(ad::add_scalar(out.bits.rounded, -1.0)), -1.0);
  ad::Var usable = ad::sub(range, ad::scale(deadzone, 0.5));
  out.scale = ad::add_scalar(ad::div(usable, ad::add_scalar(q, -0.5)), eps);
  return out;
}

QuantOutcome quantize_layer(ad::Var w, ad::Var theta_dz, std::optional<ad::Var> theta_bit,
                            const LayerQuantState& state) {
  state.validate();
  if (state.mixed_precision() != theta_bit.has_value()) {
    throw DomainError("theta_bit node must be supplied exactly in mixed-precision mode");
  }
  ad::Var range = range_stat(w, state.quantile);
  ad::Var d = deadzone_width(theta_dz, range);
  ad::Var d_for_scale = state.detach_scale_from_d ? ad::stop_gradient(d) : d;

  QuantOutcome out;
  if (theta_bit) {
    LearnedScale ls = learnable_scale(*theta_bit, d_for_scale, range, state.epsilon, state.b_min,
                                      state.b_max);
    out = deadzone_quantize(w, ls.scale, d, ls.bits.bits);
    out.bits_continuous = ls.bits.continuous;
  } else {
    ad::Var s = pruning_aware_scale(range, d_for_scale, *state.fixed_bits, state.epsilon);
    out = deadzone_quantize(w, s, d, *state.fixed_bits);
  }
  out.range_stat = range.item();
  return out;
}

QuantOutcome quantize_layer(ad::Var w, const LayerQuantState& state) {
  ad::Tape& tape = *w.tape();
  std::optional<ad::Var> theta_bit;
  if (state.theta_bit) theta_bit = tape.scalar(*state.theta_bit);
  return quantize_layer(w, tape.scalar(state.theta_dz), theta_bit, state);
}

}  // namespace codeq
