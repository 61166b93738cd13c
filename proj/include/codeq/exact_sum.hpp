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

// Correctly rounded sum of three doubles (Boldo & Melquiond, round-to-odd).
//
// The dead-zone quantizer evaluates |w| - (d/2 - s/2). Computed naively the
// inner difference is rounded first, so an input sitting exactly on the
// dead-zone edge |w| = d/2 can land an ulp above s/2 and escape the zero bin.
// With a single rounding the edge maps to exactly s/2, and d == s maps |w|
// to itself, which keeps both the pruning equivalence and the reduction to
// the uniform quantizer bit-exact.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

namespace codeq {

struct TwoSum {
  double sum;
  double err;
};

inline TwoSum two_sum(double a, double b) noexcept {
  const double s = a + b;
  const double bp = s - a;
  const double ap = s - bp;
  return {s, (a - ap) + (b - bp)};
}

inline double add_round_to_odd(double a, double b) noexcept {
  const TwoSum r = two_sum(a, b);
  if (r.err == 0.0 || (std::bit_cast<std::uint64_t>(r.sum) & 1u) != 0) return r.sum;
  return std::nextafter(r.sum, r.err > 0.0 ? INFINITY : -INFINITY);
}

/// RN(a + b + c).
inline double sum3_rounded(double a, double b, double c) noexcept {
  const TwoSum u = two_sum(b, c);
  const TwoSum t = two_sum(a, u.sum);
  const double v = add_round_to_odd(t.err, u.err);
  return t.sum + v;
}

}  // namespace codeq
