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

// Hand-rolled random instance generators for the property suites.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace codeq::testing {

inline int pick_bits(std::mt19937_64& rng) {
  static constexpr int kBits[] = {2, 3, 4, 8};
  return kBits[rng() % 4];
}

/// Weights with mixed magnitudes: mostly uniform, some tiny, some exact zeros,
/// occasionally a heavy tail.
inline std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<double> w(n);
  const int flavor = static_cast<int>(rng() % 3);
  for (double& v : w) {
    switch (flavor) {
      case 0: v = u(rng); break;
      case 1: v = g(rng); break;
      default: v = u(rng) * std::pow(10.0, -4.0 * std::fabs(u(rng))); break;
    }
    if (rng() % 50 == 0) v = 0.0;
  }
  return w;
}

/// Max |w| (the quantile-1 range statistic), computed independently.
inline double max_abs(const std::vector<double>& w) {
  double r = 0.0;
  for (double v : w) r = std::max(r, std::fabs(v));
  return r;
}

/// Overwrites a few random positions with +-d/2 exactly.
inline void plant_boundary(std::vector<double>& w, double deadzone, std::mt19937_64& rng) {
  const std::size_t plants = 1 + rng() % std::max<std::size_t>(1, w.size() / 8);
  for (std::size_t k = 0; k < plants; ++k) {
    w[rng() % w.size()] = (rng() & 1 ? 1.0 : -1.0) * (deadzone / 2.0);
  }
}

}  // namespace codeq::testing
