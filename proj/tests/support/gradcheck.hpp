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

// Test-only helpers: random tensors and a central finite-difference checker
// that never touches the backward rules it validates.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "codeq/autodiff.hpp"

namespace codeq::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  const double scale = std::max({std::fabs(a), std::fabs(b)});
  if (scale < floor) return std::fabs(a - b);
  return std::fabs(a - b) / scale;
}

using Builder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Compares backward() against central differences of
/// L(inputs) = sum(weights * f(inputs)) with fixed random weights.
inline GradCheckResult gradcheck(const std::vector<Tensor>& inputs, const Builder& f,
                                 std::uint64_t seed = 1, double h = 1e-6) {
  std::mt19937_64 rng(seed);
  std::vector<double> weights;

  auto loss_value = [&](const std::vector<Tensor>& xs) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& x : xs) vars.push_back(tape.constant(x));
    ad::Var out = f(tape, vars);
    if (weights.empty()) {
      std::uniform_real_distribution<double> dist(0.5, 1.5);
      weights.resize(out.size());
      for (double& w : weights) w = dist(rng);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) total += weights[i] * out.value()[i];
    return total;
  };
  loss_value(inputs);  // fixes the weights

  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& x : inputs) vars.push_back(tape.leaf(x, true));
  ad::Var out = f(tape, vars);
  ad::Var loss = ad::sum(ad::mul(out, tape.constant(Tensor(out.shape(), weights))));
  tape.backward(loss);

  GradCheckResult res;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto analytic = tape.grad(vars[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      std::vector<Tensor> plus = inputs, minus = inputs;
      plus[k][i] += h;
      minus[k][i] -= h;
      const double numeric = (loss_value(plus) - loss_value(minus)) / (2.0 * h);
      res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic[i], numeric, 1e-6));
      ++res.checked;
    }
  }
  return res;
}

}  // namespace codeq::testing
