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

// Serial reference kernels against their OpenMP counterparts. Shapes follow
// the MNIST MLP (batch 64, 784 -> 256) and the first mini-CNN layer.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "codeq/kernels.hpp"

namespace {

using namespace codeq;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

using Gemm = void (*)(std::size_t, std::size_t, std::size_t, std::span<const double>, std::span<const double>,
                      std::span<double>);

template <Gemm F>
void BM_gemm(benchmark::State& state) {
  const std::size_t m = 64, k = 784, n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(m * k, 1), b = random_vec(k * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0);
    F(m, k, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * k * n));
}

BENCHMARK(BM_gemm<kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(256);
BENCHMARK(BM_gemm<kernels::gemm_nt>)->Name("gemm_nt/omp")->Arg(256);
BENCHMARK(BM_gemm<kernels::serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(256);
BENCHMARK(BM_gemm<kernels::gemm_nn>)->Name("gemm_nn/omp")->Arg(256);
BENCHMARK(BM_gemm<kernels::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(256);
BENCHMARK(BM_gemm<kernels::gemm_tn>)->Name("gemm_tn/omp")->Arg(256);

using Unfold = void (*)(const kernels::ConvGeometry&, std::span<const double>, std::span<double>);

template <Unfold F>
void BM_im2col(benchmark::State& state) {
  kernels::ConvGeometry g;
  g.channels = 16;
  g.height = g.width = 28;
  g.kernel_h = g.kernel_w = 3;
  const auto image = random_vec(g.channels * g.height * g.width, 3);
  std::vector<double> cols(g.patch() * g.out_h() * g.out_w());
  for (auto _ : state) {
    F(g, image, cols);
    benchmark::DoNotOptimize(cols.data());
  }
}

BENCHMARK(BM_im2col<kernels::serial::im2col>)->Name("im2col/serial");
BENCHMARK(BM_im2col<kernels::im2col>)->Name("im2col/omp");

using Shift = void (*)(std::span<const double>, double, double, std::span<double>);

template <Shift F>
void BM_shift(benchmark::State& state) {
  auto mag = random_vec(static_cast<std::size_t>(state.range(0)), 4);
  for (double& v : mag) v = std::fabs(v);
  std::vector<double> out(mag.size());
  for (auto _ : state) {
    F(mag, 0.05, 0.0125, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * mag.size()));
}

BENCHMARK(BM_shift<kernels::serial::shift_magnitudes>)->Name("shift_magnitudes/serial")->Arg(200704);
BENCHMARK(BM_shift<kernels::shift_magnitudes>)->Name("shift_magnitudes/omp")->Arg(200704);

}  // namespace

BENCHMARK_MAIN();
