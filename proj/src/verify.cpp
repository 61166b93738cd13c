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

#include "codeq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <optional>
#include <random>
#include <sstream>

#include "codeq/autodiff.hpp"
#include "codeq/pruning.hpp"
#include "codeq/quantizers.hpp"

namespace codeq {

bool VerifyReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.passed(); });
}

bool VerifyReport::vacuous() const {
  return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.trials == 0; });
}

namespace {

using Rng = std::mt19937_64;
using Trial = std::function<std::optional<std::string>(Rng&)>;

std::uint64_t mix(std::uint64_t seed, std::uint64_t prop, std::uint64_t trial) {
  std::uint64_t z = seed ^ (prop * 0xD1B54A32D192ED03ull) ^ (trial * 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

PropertyResult run_property(const std::string& name, std::uint64_t prop_id, std::size_t trials,
                            std::uint64_t seed, const Trial& trial) {
  std::vector<std::optional<std::string>> outcome(trials);
  const auto n = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng(mix(seed, prop_id, static_cast<std::uint64_t>(i)));
    try {
      outcome[static_cast<std::size_t>(i)] = trial(rng);
    } catch (const std::exception& e) {
      outcome[static_cast<std::size_t>(i)] = std::string("exception: ") + e.what();
    }
  }
  PropertyResult r;
  r.name = name;
  r.trials = trials;
  for (std::size_t i = 0; i < trials; ++i) {
    if (!outcome[i]) continue;
    if (r.failures++ == 0) r.counterexample = "trial " + std::to_string(i) + ": " + *outcome[i];
  }
  return r;
}

int pick_bits(Rng& rng) {
  static constexpr int kBits[] = {2, 3, 4, 8};
  return kBits[rng() % 4];
}

std::vector<double> weights(std::size_t n, Rng& rng, bool allow_zero) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.3);
  const int flavor = static_cast<int>(rng() % 3);
  std::vector<double> w(n);
  for (double& v : w) {
    v = flavor == 0 ? u(rng) : flavor == 1 ? g(rng) : u(rng) * std::pow(10.0, -4.0 * std::fabs(u(rng)));
    if (allow_zero && rng() % 50 == 0) v = 0.0;
    if (!allow_zero && v == 0.0) v = 0.25;
  }
  return w;
}

double max_abs(const std::vector<double>& w) {
  double r = 0.0;
  for (double v : w) r = std::max(r, std::fabs(v));
  return r;
}

ad::Var constant(ad::Tape& tape, const std::vector<double>& w) {
  return tape.constant(Tensor({w.size()}, w));
}

std::optional<std::string> equivalence_trial(Rng& rng) {
  const int bits = pick_bits(rng);
  auto w = weights(1 + rng() % 4096, rng, true);
  double r = max_abs(w);
  if (r == 0.0) w[0] = r = 1.0;
  const double d = std::uniform_real_distribution<double>(0.0, 2.0 * r)(rng);
  const std::size_t plants = 1 + rng() % std::max<std::size_t>(1, w.size() / 8);
  for (std::size_t k = 0; k < plants; ++k) w[rng() % w.size()] = (rng() & 1 ? 1.0 : -1.0) * d / 2;
  const double s = pruning_aware_scale(r, d, bits, 1e-8);
  const auto miss = find_equivalence_mismatch(w, s, d, bits);
  if (!miss) return std::nullopt;
  // Shrink to the single offending weight when it fails on its own.
  const std::vector<double> one = {miss->weight};
  const bool single = find_equivalence_mismatch(one, s, d, bits).has_value();
  std::ostringstream os;
  os << (single ? "w = [" : "element of w = [") << fmt(miss->weight) << "], s = " << fmt(s)
     << ", d = " << fmt(d) << " (d/2 = " << fmt(d / 2) << "), b = " << bits << " -> w_hat "
     << fmt(miss->reconstruction) << ", mask keeps " << (miss->kept_by_mask ? "yes" : "no");
  if (!single) os << " (n = " << w.size() << ", index " << miss->index << ")";
  return os.str();
}

std::optional<std::string> reduction_trial(Rng& rng) {
  const int bits = pick_bits(rng);
  const auto w = weights(1 + rng() % 512, rng, true);
  const double s = std::uniform_real_distribution<double>(1e-3, 1.0)(rng);
  ad::Tape tape;
  const auto dz = deadzone_quantize(constant(tape, w), tape.scalar(s), tape.scalar(s), bits);
  const auto un = uniform_quantize(constant(tape, w), s, bits);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = dz.w_hat.value()[i], b = un.w_hat.value()[i];
    if (std::memcmp(&a, &b, sizeof a) != 0) {
      return "w = [" + fmt(w[i]) + "], s = " + fmt(s) + ", b = " + std::to_string(bits) + ": dead-zone " +
             fmt(a) + " vs uniform " + fmt(b);
    }
  }
  return std::nullopt;
}

std::optional<std::string> fixed_point_trial(Rng& rng) {
  const double r = std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 3.0)(rng));
  const int bits = 2 + static_cast<int>(rng() % 15);
  const double want = r / max_index(bits);
  const double got = absmax_recovery_fixed_point(r, bits);
  if (std::fabs(got - want) <= 1e-12 * want) return std::nullopt;
  return "R = " + fmt(r) + ", b = " + std::to_string(bits) + ": d* = " + fmt(got) + " vs R/Q = " + fmt(want);
}

std::optional<std::string> extremum_trial(Rng& rng) {
  const int bits = pick_bits(rng);
  const auto w = weights(1 + rng() % 256, rng, false);
  const double theta = std::uniform_real_distribution<double>(0.05, 4.0)(rng);
  ad::Tape tape;
  ad::Var wv = constant(tape, w);
  ad::Var range = range_stat(wv, 1.0);
  ad::Var d = deadzone_width(tape.scalar(theta), range);
  const double r = range.item();
  if (d.item() >= 2 * r) return std::nullopt;
  const auto q = deadzone_quantize(wv, pruning_aware_scale(range, d, bits, 0.0), d, bits);
  double top = 0.0;
  for (double x : q.w_hat.value()) top = std::max(top, std::fabs(x));
  if (std::fabs(top - r) <= 1e-12 * r) return std::nullopt;
  return "theta = " + fmt(theta) + ", b = " + std::to_string(bits) + ": max level " + fmt(top) +
         " vs R = " + fmt(r);
}

std::optional<std::string> unit_gradient_trial(Rng& rng) {
  const int bits = pick_bits(rng);
  auto w = weights(1 + rng() % 512, rng, false);
  const double r = max_abs(w);
  const double d = std::uniform_real_distribution<double>(0.0, 2.0 * r)(rng);
  ad::Tape tape;
  ad::Var wv = tape.leaf(Tensor({w.size()}, w), true);
  const auto q = deadzone_quantize(wv, tape.scalar(pruning_aware_scale(r, d, bits, 1e-8)), tape.scalar(d), bits);
  tape.backward(ad::sum(q.w_hat));
  const auto g = tape.grad(wv);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (g[i] != 1.0) return "w = [" + fmt(w[i]) + "], d = " + fmt(d) + ": dw_hat/dw = " + fmt(g[i]);
  }
  return std::nullopt;
}

// Central differences of a small conv -> tanh -> linear -> cross-entropy
// composition against backward.
std::optional<std::string> primitive_gradient_trial(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random = [&](Shape s) {
    Tensor t(std::move(s));
    for (double& v : t.values()) v = u(rng);
    return t;
  };
  const std::size_t stride = 1 + rng() % 2, padding = rng() % 2;
  const std::vector<Tensor> inputs = {random({2, 2, 5, 5}), random({3, 2, 3, 3}), random({3})};
  const std::size_t side = (5 + 2 * padding - 3) / stride + 1;
  const std::size_t feat = 3 * side * side;
  std::vector<Tensor> all = inputs;
  all.push_back(random({4, feat}));
  all.push_back(random({4}));
  const std::vector<int> labels = {static_cast<int>(rng() % 4), static_cast<int>(rng() % 4)};

  auto loss_of = [&](ad::Tape& tape, const std::vector<Tensor>& in, std::vector<ad::Var>* leaves) {
    std::vector<ad::Var> v;
    for (const auto& t : in) v.push_back(tape.leaf(t, leaves != nullptr));
    if (leaves) *leaves = v;
    ad::Var h = ad::tanh(ad::add_channel_bias(ad::conv2d(v[0], v[1], stride, padding), v[2]));
    ad::Var logits = ad::add_row_bias(ad::matmul_nt(ad::reshape(h, {2, feat}), v[3]), v[4]);
    return ad::softmax_cross_entropy(logits, labels);
  };

  ad::Tape tape;
  std::vector<ad::Var> leaves;
  tape.backward(loss_of(tape, all, &leaves));
  const double h = 1e-6;
  for (std::size_t a = 0; a < all.size(); ++a) {
    const auto g = tape.grad(leaves[a]);
    for (std::size_t i = 0; i < all[a].size(); i += 1 + all[a].size() / 8) {
      auto plus = all, minus = all;
      plus[a][i] += h;
      minus[a][i] -= h;
      ad::Tape tp, tm;
      const double fd = (loss_of(tp, plus, nullptr).item() - loss_of(tm, minus, nullptr).item()) / (2 * h);
      const double denom = std::max({std::fabs(fd), std::fabs(g[i]), 1e-4});
      if (std::fabs(fd - g[i]) / denom > 1e-5) {
        return "input " + std::to_string(a) + " element " + std::to_string(i) + ": backward " + fmt(g[i]) +
               " vs finite difference " + fmt(fd);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& opts) {
  const std::size_t n = opts.trials;
  const std::size_t tenth = n == 0 ? 0 : std::max<std::size_t>(1, n / 10);
  const std::size_t hundredth = n == 0 ? 0 : std::max<std::size_t>(1, n / 100);
  VerifyReport rep;
  rep.properties.push_back(run_property("pruning_equivalence", 1, n, opts.seed, equivalence_trial));
  rep.properties.push_back(run_property("uniform_reduction", 2, tenth, opts.seed, reduction_trial));
  rep.properties.push_back(
      run_property("absmax_fixed_point", 3, std::min<std::size_t>(n, 100), opts.seed, fixed_point_trial));
  rep.properties.push_back(run_property("grid_extremum", 4, tenth, opts.seed, extremum_trial));
  rep.properties.push_back(run_property("unit_weight_gradient", 5, tenth, opts.seed, unit_gradient_trial));
  rep.properties.push_back(
      run_property("primitive_gradients", 6, hundredth, opts.seed, primitive_gradient_trial));
  return rep;
}

}  // namespace codeq
