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

#include <cstdint>
#include <vector>

#include "codeq/exact_sum.hpp"
#include "codeq/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace codeq::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

using Index = std::int64_t;

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Row-axpy order: the innermost loop runs over contiguous C and B rows, which
// vectorizes without reassociating any sum.
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    double* crow = pc + i * n;
    const double* arow = pa + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  std::vector<double> bt(k * n);
#pragma omp parallel for schedule(static) if (k * n > kParallelWork)
  for (Index p = 0; p < static_cast<Index>(k); ++p) {
    for (std::size_t j = 0; j < n; ++j) bt[p * n + j] = b[j * k + p];
  }
  gemm_nn(m, k, n, a, bt, c);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
#pragma omp parallel for schedule(static) if (m * k * n > kParallelWork)
  for (Index i = 0; i < static_cast<Index>(m); ++i) {
    double* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[p * m + i];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void im2col(const ConvGeometry& g, std::span<const double> image, std::span<double> cols) {
  const std::size_t oh = g.out_h();
  const std::size_t ow = g.out_w();
  const std::size_t rows = g.patch();
#pragma omp parallel for schedule(static) if (rows * oh * ow > kParallelWork)
  for (Index row = 0; row < static_cast<Index>(rows); ++row) {
    const std::size_t kj = row % g.kernel_w;
    const std::size_t ki = (row / g.kernel_w) % g.kernel_h;
    const std::size_t c = row / (g.kernel_w * g.kernel_h);
    double* out = cols.data() + row * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const long iy = static_cast<long>(y * g.stride + ki) - static_cast<long>(g.padding);
      const bool row_ok = iy >= 0 && iy < static_cast<long>(g.height);
      for (std::size_t x = 0; x < ow; ++x) {
        const long ix = static_cast<long>(x * g.stride + kj) - static_cast<long>(g.padding);
        out[y * ow + x] = (row_ok && ix >= 0 && ix < static_cast<long>(g.width))
                              ? image[(c * g.height + iy) * g.width + ix]
                              : 0.0;
      }
    }
  }
}

// Parallel over channels: patches from different channels never touch the same
// image element, and within a channel the accumulation order is fixed.
void col2im(const ConvGeometry& g, std::span<const double> cols, std::span<double> image) {
  const std::size_t oh = g.out_h();
  const std::size_t ow = g.out_w();
#pragma omp parallel for schedule(static) if (g.patch() * oh * ow > kParallelWork)
  for (Index c = 0; c < static_cast<Index>(g.channels); ++c) {
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const std::size_t row = (c * g.kernel_h + ki) * g.kernel_w + kj;
        const double* in = cols.data() + row * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
          const long iy = static_cast<long>(y * g.stride + ki) - static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          for (std::size_t x = 0; x < ow; ++x) {
            const long ix = static_cast<long>(x * g.stride + kj) - static_cast<long>(g.padding);
            if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
            image[(c * g.height + iy) * g.width + ix] += in[y * ow + x];
          }
        }
      }
    }
  }
}

void shift_magnitudes(std::span<const double> mag, double half_d, double half_s,
                      std::span<double> out) {
  const Index n = static_cast<Index>(mag.size());
#pragma omp parallel for schedule(static) if (mag.size() > kParallelWork)
  for (Index i = 0; i < n; ++i) out[i] = sum3_rounded(mag[i], -half_d, half_s);
}

}  // namespace codeq::kernels
