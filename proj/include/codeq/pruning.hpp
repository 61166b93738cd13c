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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace codeq {

/// Unstructured magnitude-pruning mask. bits[i] == 1 iff |w_i| > threshold.
struct Mask {
  std::vector<std::uint8_t> bits;
  double threshold = 0.0;

  std::size_t kept() const;
};

Mask magnitude_mask(std::span<const double> w, double tau);

/// Fraction of elements that are exactly zero.
double sparsity(std::span<const double> x);
inline double density(std::span<const double> x) { return 1.0 - sparsity(x); }

struct EquivalenceMismatch {
  std::size_t index = 0;
  double weight = 0.0;
  double reconstruction = 0.0;
  bool kept_by_mask = false;
};

/// First element where the dead-zone quantizer's zero set disagrees with the
/// magnitude mask at tau = d/2, if any.
std::optional<EquivalenceMismatch> find_equivalence_mismatch(std::span<const double> w, double scale,
                                                             double deadzone, int bits);

/// True iff deadzone_quantize(w, s, d, b) zeroes exactly the weights the
/// magnitude mask at d/2 removes.
bool equivalence_oracle(std::span<const double> w, double scale, double deadzone, int bits);

}  // namespace codeq
