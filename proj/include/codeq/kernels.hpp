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

// Dense inner loops used by the autodiff engine.
//
// Two implementations live side by side. `kernels::serial` is the plain
// textbook version kept as a reference for tests and benchmarks. The
// unqualified `kernels::` functions are OpenMP-parallel over output rows;
// every output element is reduced by a single thread in a fixed order, so
// results do not depend on the thread count.
//
// All gemm variants accumulate: C += op(A) * op(B).

#pragma once

#include <cstddef>
#include <span>

namespace codeq::kernels {

struct ConvGeometry {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_h() const { return (height + 2 * padding - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (width + 2 * padding - kernel_w) / stride + 1; }
  std::size_t patch() const { return channels * kernel_h * kernel_w; }
};

/// C[m,n] += A[m,k] * B[k,n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
/// C[m,n] += A[m,k] * B[n,k]^T
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
/// C[m,n] += A[k,m]^T * B[k,n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c);

/// Unfolds one image [C,H,W] into columns [C*kh*kw, OH*OW] (overwrites).
void im2col(const ConvGeometry& g, std::span<const double> image, std::span<double> cols);
/// Adjoint of im2col: folds columns back, accumulating into the image.
void col2im(const ConvGeometry& g, std::span<const double> cols, std::span<double> image);

/// out[i] = RN(mag[i] - half_d + half_s) with a single rounding.
void shift_magnitudes(std::span<const double> mag, double half_d, double half_s,
                      std::span<double> out);

namespace serial {

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_nt(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, std::span<const double> a,
             std::span<const double> b, std::span<double> c);
void im2col(const ConvGeometry& g, std::span<const double> image, std::span<double> cols);
void col2im(const ConvGeometry& g, std::span<const double> cols, std::span<double> image);
void shift_magnitudes(std::span<const double> mag, double half_d, double half_s,
                      std::span<double> out);

}  // namespace serial

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace codeq::kernels
