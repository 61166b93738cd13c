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

// Reference kernels. Straight loops, no blocking, no threads.

#include "codeq/exact_sum.hpp"
#include "codeq/kernels.hpp"

namespace codeq::kernels::serial {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] += acc;
    }
  }
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] += acc;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * b[p * n + j];
      c[i * n + j] += acc;
    }
  }
}

void im2col(const ConvGeometry& g, std::span<const double> image, std::span<double> cols) {
  const std::size_t oh = g.out_h();
  const std::size_t ow = g.out_w();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const std::size_t row = (c * g.kernel_h + ki) * g.kernel_w + kj;
        for (std::size_t y = 0; y < oh; ++y) {
          for (std::size_t x = 0; x < ow; ++x) {
            const long iy = static_cast<long>(y * g.stride + ki) - static_cast<long>(g.padding);
            const long ix = static_cast<long>(x * g.stride + kj) - static_cast<long>(g.padding);
            double v = 0.0;
            if (iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) &&
                ix < static_cast<long>(g.width)) {
              v = image[(c * g.height + iy) * g.width + ix];
            }
            cols[row * oh * ow + y * ow + x] = v;
          }
        }
      }
    }
  }
}

void col2im(const ConvGeometry& g, std::span<const double> cols, std::span<double> image) {
  const std::size_t oh = g.out_h();
  const std::size_t ow = g.out_w();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const std::size_t row = (c * g.kernel_h + ki) * g.kernel_w + kj;
        for (std::size_t y = 0; y < oh; ++y) {
          for (std::size_t x = 0; x < ow; ++x) {
            const long iy = static_cast<long>(y * g.stride + ki) - static_cast<long>(g.padding);
            const long ix = static_cast<long>(x * g.stride + kj) - static_cast<long>(g.padding);
            if (iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) &&
                ix < static_cast<long>(g.width)) {
              image[(c * g.height + iy) * g.width + ix] += cols[row * oh * ow + y * ow + x];
            }
          }
        }
      }
    }
  }
}

void shift_magnitudes(std::span<const double> mag, double half_d, double half_s,
                      std::span<double> out) {
  for (std::size_t i = 0; i < mag.size(); ++i) out[i] = sum3_rounded(mag[i], -half_d, half_s);
}

}  // namespace codeq::kernels::serial
