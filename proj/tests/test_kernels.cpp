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

#include <gtest/gtest.h>
#include <mpfr.h>

#include <cmath>
#include <random>
#include <vector>

#include "codeq/exact_sum.hpp"
#include "codeq/kernels.hpp"

namespace codeq {
namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  // Some exact zeros exercise the sparse skip path.
  for (std::size_t i = 0; i < n; i += 7) v[i] = 0.0;
  return v;
}

// Row-axpy order differs from the dot-product order of the serial reference,
// so compare with a tolerance scaled by k.
void expect_close(const std::vector<double>& a, const std::vector<double>& b, std::size_t k) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], 1e-14 * static_cast<double>(k + 1)) << i;
  }
}

TEST(Gemm, ParallelMatchesSerial) {
  std::mt19937_64 rng(3);
  for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 1, 1},
                         {3, 5, 7},
                         {64, 300, 33},
                         {129, 65, 257}}) {
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    const auto bt = random_vec(n * k, rng);
    const auto at = random_vec(k * m, rng);
    const auto c0 = random_vec(m * n, rng);

    auto c1 = c0, c2 = c0;
    kernels::gemm_nn(m, k, n, a, b, c1);
    kernels::serial::gemm_nn(m, k, n, a, b, c2);
    expect_close(c1, c2, k);

    c1 = c0, c2 = c0;
    kernels::gemm_nt(m, k, n, a, bt, c1);
    kernels::serial::gemm_nt(m, k, n, a, bt, c2);
    expect_close(c1, c2, k);

    c1 = c0, c2 = c0;
    kernels::gemm_tn(m, k, n, at, b, c1);
    kernels::serial::gemm_tn(m, k, n, at, b, c2);
    expect_close(c1, c2, k);
  }
}

TEST(Gemm, SmallHandExample) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6};  // 2x3
  const std::vector<double> b = {1, 0, 0, 1, 1, 1};  // 3x2
  std::vector<double> c = {10, 0, 0, 0};
  kernels::gemm_nn(2, 3, 2, a, b, c);
  EXPECT_EQ(c, (std::vector<double>{14, 5, 10, 11}));
}

TEST(Im2col, ParallelMatchesSerialAndAdjointHolds) {
  std::mt19937_64 rng(9);
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t pad : {0u, 1u, 2u}) {
      kernels::ConvGeometry g{3, 9, 8, 3, 2, stride, pad};
      const auto img = random_vec(g.channels * g.height * g.width, rng);
      std::vector<double> c1(g.patch() * g.out_h() * g.out_w(), -5.0), c2(c1.size(), 7.0);
      kernels::im2col(g, img, c1);
      kernels::serial::im2col(g, img, c2);
      EXPECT_EQ(c1, c2);

      // <im2col(x), y> == <x, col2im(y)>
      const auto y = random_vec(c1.size(), rng);
      std::vector<double> back1(img.size(), 0.0), back2(img.size(), 0.0);
      kernels::col2im(g, y, back1);
      kernels::serial::col2im(g, y, back2);
      EXPECT_EQ(back1, back2);
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) lhs += c1[i] * y[i];
      for (std::size_t i = 0; i < img.size(); ++i) rhs += img[i] * back1[i];
      EXPECT_NEAR(lhs, rhs, 1e-12);
    }
  }
}

double mpfr_sum3(double a, double b, double c) {
  mpfr_t x, y;
  mpfr_init2(x, 4200);
  mpfr_init2(y, 4200);
  mpfr_set_d(x, a, MPFR_RNDN);
  mpfr_set_d(y, b, MPFR_RNDN);
  mpfr_add(x, x, y, MPFR_RNDN);
  mpfr_set_d(y, c, MPFR_RNDN);
  mpfr_add(x, x, y, MPFR_RNDN);
  const double out = mpfr_get_d(x, MPFR_RNDN);
  mpfr_clear(x);
  mpfr_clear(y);
  return out;
}

TEST(Sum3Rounded, MatchesArbitraryPrecision) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> ex(-60, 60);
  for (int trial = 0; trial < 200000; ++trial) {
    double a = std::ldexp(u(rng), ex(rng)) * (rng() & 1 ? 1 : -1);
    double b = std::ldexp(u(rng), ex(rng)) * (rng() & 1 ? 1 : -1);
    double c = std::ldexp(u(rng), ex(rng)) * (rng() & 1 ? 1 : -1);
    if (trial % 3 == 0) c = -(a + b) + std::ldexp(u(rng), ex(rng) - 60);  // cancellation
    if (trial % 5 == 0) b = -a / 2;                                          // edge-like input
    const double got = sum3_rounded(a, b, c);
    const double want = mpfr_sum3(a, b, c);
    ASSERT_EQ(got, want) << a << " " << b << " " << c;
  }
}

TEST(Sum3Rounded, DeadZoneEdgeAndReduction) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(1e-6, 4.0);
  for (int trial = 0; trial < 100000; ++trial) {
    const double d = u(rng), s = u(rng), w = u(rng);
    EXPECT_EQ(sum3_rounded(d / 2, -(d / 2), s / 2), s / 2);
    EXPECT_EQ(sum3_rounded(w, -(s / 2), s / 2), w);
  }
}

TEST(ShiftMagnitudes, ParallelMatchesSerialExactly) {
  std::mt19937_64 rng(29);
  auto mag = random_vec(50000, rng);
  for (double& m : mag) m = std::fabs(m);
  std::vector<double> o1(mag.size()), o2(mag.size());
  kernels::shift_magnitudes(mag, 0.3, 0.05, o1);
  kernels::serial::shift_magnitudes(mag, 0.3, 0.05, o2);
  EXPECT_EQ(o1, o2);
}

}  // namespace
}  // namespace codeq
