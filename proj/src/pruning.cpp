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

#include "codeq/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "codeq/error.hpp"
#include "codeq/quantizers.hpp"

namespace codeq {

std::size_t Mask::kept() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Mask magnitude_mask(std::span<const double> w, double tau) {
  if (!(tau >= 0.0)) throw DomainError("pruning threshold must be >= 0, got " + std::to_string(tau));
  Mask m;
  m.threshold = tau;
  m.bits.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) m.bits[i] = std::fabs(w[i]) > tau ? 1 : 0;
  return m;
}

double sparsity(std::span<const double> x) {
  if (x.empty()) throw DomainError("sparsity of an empty tensor");
  const auto zeros = std::count(x.begin(), x.end(), 0.0);
  return static_cast<double>(zeros) / static_cast<double>(x.size());
}

std::optional<EquivalenceMismatch> find_equivalence_mismatch(std::span<const double> w, double scale,
                                                             double deadzone, int bits) {
  ad::Tape tape;
  ad::Var wv = tape.constant(Tensor({w.size()}, std::vector<double>(w.begin(), w.end())));
  const QuantOutcome q = deadzone_quantize(wv, tape.scalar(scale), tape.scalar(deadzone), bits);
  const Mask mask = magnitude_mask(w, deadzone / 2.0);
  const auto& w_hat = q.w_hat.value();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool zero = w_hat[i] == 0.0;
    if (zero == (mask.bits[i] == 1)) return EquivalenceMismatch{i, w[i], w_hat[i], mask.bits[i] == 1};
  }
  return std::nullopt;
}

bool equivalence_oracle(std::span<const double> w, double scale, double deadzone, int bits) {
  return !find_equivalence_mismatch(w, scale, deadzone, bits).has_value();
}

}  // namespace codeq
