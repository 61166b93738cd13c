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

#include "codeq/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "codeq/error.hpp"
#include "codeq/kernels.hpp"

namespace codeq::ad {

namespace {

constexpr std::size_t kParallelElems = 1u << 15;
using Index = std::int64_t;

Tape& tape_of(Var a) {
  if (!a.valid()) throw Error("operation on an empty Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw Error("operands live on different tapes");
  return t;
}

enum class Broadcast { same, lhs_scalar, rhs_scalar };

Broadcast broadcast_kind(const char* op, Var a, Var b) {
  if (a.shape() == b.shape()) return Broadcast::same;
  if (a.size() == 1) return Broadcast::lhs_scalar;
  if (b.size() == 1) return Broadcast::rhs_scalar;
  throw ShapeError(std::string(op) + ": shapes " + to_string(a.shape()) + " and " +
                   to_string(b.shape()) + " do not broadcast");
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// f(x, y) -> z; da(g, x, y, z) and db(g, x, y, z) give the adjoint contributions.
template <class F, class Da, class Db>
Var binary(const char* op, Var a, Var b, F f, Da da, Db db) {
  Tape& tape = tape_of(a, b);
  const Broadcast kind = broadcast_kind(op, a, b);
  const Shape shape = kind == Broadcast::lhs_scalar ? b.shape() : a.shape();
  const std::size_t n = numel(shape);
  const std::vector<double>& x = a.value();
  const std::vector<double>& y = b.value();
  const std::size_t xs = kind == Broadcast::lhs_scalar ? 0 : 1;
  const std::size_t ys = kind == Broadcast::rhs_scalar ? 0 : 1;
  std::vector<double> z(n);
#pragma omp parallel for schedule(static) if (n > kParallelElems)
  for (Index i = 0; i < static_cast<Index>(n); ++i) z[i] = f(x[i * xs], y[i * ys]);

  return tape.push(op, shape, std::move(z), {a.id(), b.id()},
                   [xs, ys, da, db](const BackwardContext& ctx) {
                     const auto g = ctx.grad_out();
                     const auto& x = ctx.input(0).value;
                     const auto& y = ctx.input(1).value;
                     const auto& z = ctx.node().value;
                     const std::size_t n = g.size();
                     if (auto ga = ctx.grad_in(0); !ga.empty()) {
                       if (xs == 0) {
                         double acc = 0.0;
                         for (std::size_t i = 0; i < n; ++i) acc += da(g[i], x[0], y[i * ys], z[i]);
                         ga[0] += acc;
                       } else {
                         for (std::size_t i = 0; i < n; ++i) ga[i] += da(g[i], x[i], y[i * ys], z[i]);
                       }
                     }
                     if (auto gb = ctx.grad_in(1); !gb.empty()) {
                       if (ys == 0) {
                         double acc = 0.0;
                         for (std::size_t i = 0; i < n; ++i) acc += db(g[i], x[i * xs], y[0], z[i]);
                         gb[0] += acc;
                       } else {
                         for (std::size_t i = 0; i < n; ++i) gb[i] += db(g[i], x[i * xs], y[i], z[i]);
                       }
                     }
                   });
}

// f(x) -> y; d(g, x, y) gives the adjoint contribution. A null derivative
// means the node passes no gradient.
template <class F, class D>
Var unary(const char* op, Var a, F f, D d) {
  Tape& tape = tape_of(a);
  const std::vector<double>& x = a.value();
  const std::size_t n = x.size();
  std::vector<double> y(n);
#pragma omp parallel for schedule(static) if (n > kParallelElems)
  for (Index i = 0; i < static_cast<Index>(n); ++i) y[i] = f(x[i]);
  return tape.push(op, a.shape(), std::move(y), {a.id()}, [d](const BackwardContext& ctx) {
    auto ga = ctx.grad_in(0);
    const auto g = ctx.grad_out();
    const auto& x = ctx.input(0).value;
    const auto& y = ctx.node().value;
    const std::size_t n = g.size();
#pragma omp parallel for schedule(static) if (n > kParallelElems)
    for (Index i = 0; i < static_cast<Index>(n); ++i) ga[i] += d(g[i], x[i], y[i]);
  });
}

template <class F>
Var detached(const char* op, Var a, F f) {
  Tape& tape = tape_of(a);
  const std::vector<double>& x = a.value();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return tape.push(op, a.shape(), std::move(y), {a.id()}, nullptr);
}

void require_rank(const char* op, Var a, std::size_t rank) {
  if (a.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(a.shape()));
  }
}

}  // namespace

// --- Var / context / tape -------------------------------------------------

const Node& Var::node() const { return tape_of(*this).node(id_); }

double Var::item() const {
  const auto& v = value();
  if (v.size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return v[0];
}

const Node& BackwardContext::node() const { return tape_.node(self_); }

const Node& BackwardContext::input(std::size_t k) const { return tape_.node(node().inputs.at(k)); }

bool BackwardContext::wants(std::size_t k) const { return input(k).requires_grad; }

std::span<double> BackwardContext::grad_in(std::size_t k) const {
  if (!wants(k)) return {};
  const NodeId id = node().inputs[k];
  auto& buf = adjoints_[id];
  if (buf.empty()) buf.assign(tape_.node(id).value.size(), 0.0);
  return buf;
}

Var Tape::leaf(const Tensor& t, bool requires_grad) {
  Node n;
  n.shape = t.shape();
  n.value = t.values();
  n.requires_grad = requires_grad;
  n.op = "leaf";
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(std::string op, Shape shape, std::vector<double> value, std::vector<NodeId> inputs,
               BackwardFn backward) {
  bool rg = false;
  for (NodeId id : inputs) rg = rg || nodes_.at(id).requires_grad;
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(value);
  n.op = std::move(op);
  n.inputs = std::move(inputs);
  n.requires_grad = rg && static_cast<bool>(backward);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw Error("backward: loss belongs to another tape");
  if (loss.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  std::vector<std::vector<double>> adjoints(nodes_.size());
  adjoints[loss.id()] = {1.0};
  for (NodeId id = loss.id() + 1; id-- > 0;) {
    if (adjoints[id].empty()) continue;
    const Node& n = nodes_[id];
    if (n.backward) n.backward(BackwardContext(*this, adjoints, id));
  }
  for (NodeId id = 0; id <= loss.id(); ++id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || adjoints[id].empty()) continue;
    if (n.grad.empty()) {
      n.grad = std::move(adjoints[id]);
    } else {
      for (std::size_t i = 0; i < n.grad.size(); ++i) n.grad[i] += adjoints[id][i];
    }
  }
}

std::span<const double> Tape::grad(Var v) {
  Node& n = nodes_.at(v.id());
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

// --- element-wise ---------------------------------------------------------

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double, double) { return g; },
      [](double g, double, double, double) { return g; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double, double) { return g; },
      [](double g, double, double, double) { return -g; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y, double) { return g * y; },
      [](double g, double x, double, double) { return g * x; });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double g, double, double y, double) { return g / y; },
      [](double g, double, double y, double z) { return -g * z / y; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double c) {
  return unary(
      "scale", a, [c](double x) { return c * x; },
      [c](double g, double, double) { return c * g; });
}

Var add_scalar(Var a, double c) {
  return unary(
      "add_scalar", a, [c](double x) { return x + c; },
      [](double g, double, double) { return g; });
}

Var abs(Var a) {
  return unary(
      "abs", a, [](double x) { return std::fabs(x); },
      [](double g, double x, double) { return g * sign_of(x); });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double g, double, double y) { return g * (1.0 - y * y); });
}

Var pow2(Var a) {
  return unary(
      "pow2", a, [](double x) { return std::exp2(x); },
      [](double g, double, double y) { return g * y * std::numbers::ln2; });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double g, double x, double) { return x > 0.0 ? g : 0.0; });
}

Var square(Var a) {
  return unary(
      "square", a, [](double x) { return x * x; },
      [](double g, double x, double) { return 2.0 * x * g; });
}

// --- reductions -----------------------------------------------------------

Var sum(Var a) {
  const auto& x = a.value();
  double s = 0.0;
  for (double v : x) s += v;
  return tape_of(a).push("sum", {1}, {s}, {a.id()}, [](const BackwardContext& ctx) {
    auto ga = ctx.grad_in(0);
    const double g = ctx.grad_out()[0];
    for (double& v : ga) v += g;
  });
}

Var mean(Var a) {
  if (a.size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Var sum_squares(Var a) {
  const auto& x = a.value();
  double s = 0.0;
  for (double v : x) s += v * v;
  return tape_of(a).push("sum_squares", {1}, {s}, {a.id()}, [](const BackwardContext& ctx) {
    auto ga = ctx.grad_in(0);
    const double g = ctx.grad_out()[0];
    const auto& x = ctx.input(0).value;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += 2.0 * x[i] * g;
  });
}

Var max_reduce(Var a) {
  const auto& x = a.value();
  if (x.empty()) throw ShapeError("max of an empty tensor");
  const std::size_t arg =
      static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
  return tape_of(a).push("max", {1}, {x[arg]}, {a.id()}, [arg](const BackwardContext& ctx) {
    ctx.grad_in(0)[arg] += ctx.grad_out()[0];
  });
}

// --- linear algebra -------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  std::vector<double> y(m * n, 0.0);
  kernels::gemm_nn(m, k, n, a.value(), b.value(), y);
  return tape.push("matmul", {m, n}, std::move(y), {a.id(), b.id()},
                   [m, k, n](const BackwardContext& ctx) {
                     const auto g = ctx.grad_out();
                     if (auto ga = ctx.grad_in(0); !ga.empty())
                       kernels::gemm_nt(m, n, k, g, ctx.input(1).value, ga);
                     if (auto gb = ctx.grad_in(1); !gb.empty())
                       kernels::gemm_tn(k, m, n, ctx.input(0).value, g, gb);
                   });
}

Var matmul_nt(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_rank("matmul_nt", a, 2);
  require_rank("matmul_nt", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k) {
    throw ShapeError("matmul_nt: " + to_string(a.shape()) + " x " + to_string(b.shape()) + "^T");
  }
  std::vector<double> y(m * n, 0.0);
  kernels::gemm_nt(m, k, n, a.value(), b.value(), y);
  return tape.push("matmul_nt", {m, n}, std::move(y), {a.id(), b.id()},
                   [m, k, n](const BackwardContext& ctx) {
                     const auto g = ctx.grad_out();
                     if (auto ga = ctx.grad_in(0); !ga.empty())
                       kernels::gemm_nn(m, n, k, g, ctx.input(1).value, ga);
                     if (auto gb = ctx.grad_in(1); !gb.empty())
                       kernels::gemm_tn(n, m, k, g, ctx.input(0).value, gb);
                   });
}

Var add_row_bias(Var x, Var bias) {
  Tape& tape = tape_of(x, bias);
  require_rank("add_row_bias", x, 2);
  const std::size_t n = x.shape()[0], c = x.shape()[1];
  if (bias.size() != c) throw ShapeError("add_row_bias: bias size mismatch");
  std::vector<double> y = x.value();
  const auto& b = bias.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) y[i * c + j] += b[j];
  return tape.push("add_row_bias", x.shape(), std::move(y), {x.id(), bias.id()},
                   [n, c](const BackwardContext& ctx) {
                     const auto g = ctx.grad_out();
                     if (auto gx = ctx.grad_in(0); !gx.empty())
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     if (auto gb = ctx.grad_in(1); !gb.empty())
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
                   });
}

Var add_channel_bias(Var x, Var bias) {
  Tape& tape = tape_of(x, bias);
  require_rank("add_channel_bias", x, 4);
  const std::size_t n = x.shape()[0], c = x.shape()[1], hw = x.shape()[2] * x.shape()[3];
  if (bias.size() != c) throw ShapeError("add_channel_bias: bias size mismatch");
  std::vector<double> y = x.value();
  const auto& b = bias.value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < hw; ++p) y[(i * c + ch) * hw + p] += b[ch];
  return tape.push("add_channel_bias", x.shape(), std::move(y), {x.id(), bias.id()},
                   [n, c, hw](const BackwardContext& ctx) {
                     const auto g = ctx.grad_out();
                     if (auto gx = ctx.grad_in(0); !gx.empty())
                       for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                     if (auto gb = ctx.grad_in(1); !gb.empty())
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t ch = 0; ch < c; ++ch)
                           for (std::size_t p = 0; p < hw; ++p) gb[ch] += g[(i * c + ch) * hw + p];
                   });
}

Var conv2d(Var x, Var w, std::size_t stride, std::size_t padding) {
  Tape& tape = tape_of(x, w);
  require_rank("conv2d", x, 4);
  require_rank("conv2d", w, 4);
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t batch = x.shape()[0];
  kernels::ConvGeometry geo{x.shape()[1], x.shape()[2], x.shape()[3], w.shape()[2],
                            w.shape()[3], stride, padding};
  const std::size_t out_c = w.shape()[0];
  if (w.shape()[1] != geo.channels) {
    throw ShapeError("conv2d: input " + to_string(x.shape()) + " vs weight " +
                     to_string(w.shape()));
  }
  if (geo.height + 2 * padding < geo.kernel_h || geo.width + 2 * padding < geo.kernel_w) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
  const std::size_t oh = geo.out_h(), ow = geo.out_w(), pix = oh * ow, patch = geo.patch();
  const std::size_t in_stride = geo.channels * geo.height * geo.width;

  auto cols = std::make_shared<std::vector<double>>(batch * patch * pix);
  std::vector<double> y(batch * out_c * pix, 0.0);
  const auto& xv = x.value();
  for (std::size_t i = 0; i < batch; ++i) {
    std::span<double> ci(cols->data() + i * patch * pix, patch * pix);
    kernels::im2col(geo, std::span<const double>(xv.data() + i * in_stride, in_stride), ci);
    kernels::gemm_nn(out_c, patch, pix, w.value(), ci,
                     std::span<double>(y.data() + i * out_c * pix, out_c * pix));
  }
  return tape.push(
      "conv2d", {batch, out_c, oh, ow}, std::move(y), {x.id(), w.id()},
      [geo, cols, batch, out_c, pix, patch, in_stride](const BackwardContext& ctx) {
        const auto g = ctx.grad_out();
        auto gx = ctx.grad_in(0);
        auto gw = ctx.grad_in(1);
        const auto& wv = ctx.input(1).value;
        std::vector<double> dcols(gx.empty() ? 0 : patch * pix);
        for (std::size_t i = 0; i < batch; ++i) {
          std::span<const double> gi(g.data() + i * out_c * pix, out_c * pix);
          std::span<const double> ci(cols->data() + i * patch * pix, patch * pix);
          if (!gw.empty()) kernels::gemm_nt(out_c, pix, patch, gi, ci, gw);
          if (!gx.empty()) {
            std::fill(dcols.begin(), dcols.end(), 0.0);
            kernels::gemm_tn(patch, out_c, pix, wv, gi, dcols);
            kernels::col2im(geo, dcols, gx.subspan(i * in_stride, in_stride));
          }
        }
      });
}

Var maxpool2d(Var x, std::size_t k) {
  Tape& tape = tape_of(x);
  require_rank("maxpool2d", x, 4);
  if (k == 0) throw ShapeError("maxpool2d: window must be positive");
  const std::size_t n = x.shape()[0], c = x.shape()[1], h = x.shape()[2], w = x.shape()[3];
  const std::size_t oh = h / k, ow = w / k;
  if (oh == 0 || ow == 0) throw ShapeError("maxpool2d: window larger than input");
  const auto& xv = x.value();
  std::vector<double> y(n * c * oh * ow);
  std::vector<std::size_t> arg(y.size());
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const double* in = xv.data() + plane * h * w;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = (i * k) * w + j * k;
        for (std::size_t di = 0; di < k; ++di)
          for (std::size_t dj = 0; dj < k; ++dj) {
            const std::size_t idx = (i * k + di) * w + (j * k + dj);
            if (in[idx] > in[best]) best = idx;
          }
        const std::size_t o = plane * oh * ow + i * ow + j;
        y[o] = in[best];
        arg[o] = plane * h * w + best;
      }
    }
  }
  return tape.push("maxpool2d", {n, c, oh, ow}, std::move(y), {x.id()},
                   [arg = std::move(arg)](const BackwardContext& ctx) {
                     auto gx = ctx.grad_in(0);
                     const auto g = ctx.grad_out();
                     for (std::size_t o = 0; o < g.size(); ++o) gx[arg[o]] += g[o];
                   });
}

Var reshape(Var a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  }
  return tape_of(a).push("reshape", std::move(shape), a.value(), {a.id()},
                         [](const BackwardContext& ctx) {
                           auto ga = ctx.grad_in(0);
                           const auto g = ctx.grad_out();
                           for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                         });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  Tape& tape = tape_of(logits);
  require_rank("softmax_cross_entropy", logits, 2);
  const std::size_t n = logits.shape()[0], c = logits.shape()[1];
  if (labels.size() != n) throw ShapeError("softmax_cross_entropy: label count mismatch");
  if (n == 0) throw ShapeError("softmax_cross_entropy: empty batch");
  const auto& x = logits.value();
  std::vector<double> probs(n * c);
  std::vector<int> lab(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (lab[i] < 0 || static_cast<std::size_t>(lab[i]) >= c) {
      throw DomainError("softmax_cross_entropy: label " + std::to_string(lab[i]) +
                        " outside [0, " + std::to_string(c) + ")");
    }
    const double* row = x.data() + i * c;
    const double m = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - m);
    const double lse = m + std::log(z);
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - lse);
    total += lse - row[lab[i]];
  }
  return tape.push("softmax_cross_entropy", {1}, {total / static_cast<double>(n)}, {logits.id()},
                   [probs = std::move(probs), lab = std::move(lab), n, c](const BackwardContext& ctx) {
                     auto gx = ctx.grad_in(0);
                     const double g = ctx.grad_out()[0] / static_cast<double>(n);
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t j = 0; j < c; ++j) {
                         const double target = static_cast<int>(j) == lab[i] ? 1.0 : 0.0;
                         gx[i * c + j] += g * (probs[i * c + j] - target);
                       }
                   });
}

// --- straight-through and gradient-free nodes -----------------------------

double round_half_even(double x) noexcept {
#ifdef CODEQ_ROUND_HALF_AWAY
  return std::round(x) + 0.0;
#else
  return std::nearbyint(x) + 0.0;
#endif
}

Var ste_round(Var a) {
  return unary(
      "ste_round", a, [](double x) { return round_half_even(x); },
      [](double g, double, double) { return g; });
}

Var ste_relu(Var a) {
  return unary(
      "ste_relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double g, double, double) { return g; });
}

Var ste_clip(Var a, double lo, double hi) {
  if (lo > hi) throw DomainError("ste_clip: invalid range lo > hi");
  return unary(
      "ste_clip", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [](double g, double, double) { return g; });
}

Var masked_clip(Var a, double lo, double hi) {
  if (lo > hi) throw DomainError("masked_clip: invalid range lo > hi");
  return unary(
      "masked_clip", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double g, double x, double) { return (x >= lo && x <= hi) ? g : 0.0; });
}

Var zero_grad_sign(Var a) { return detached("sign", a, sign_of); }

Var stop_gradient(Var a) {
  return detached("stop_gradient", a, [](double x) { return x; });
}

Var shift_by_halfwidths(Var mag, Var d, Var s) {
  Tape& tape = tape_of(mag, d);
  tape_of(mag, s);
  const double half_d = d.item() * 0.5;
  const double half_s = s.item() * 0.5;
  std::vector<double> y(mag.size());
  kernels::shift_magnitudes(mag.value(), half_d, half_s, y);
  return tape.push("shift_by_halfwidths", mag.shape(), std::move(y), {mag.id(), d.id(), s.id()},
                   [](const BackwardContext& ctx) {
                     const auto g = ctx.grad_out();
                     if (auto gm = ctx.grad_in(0); !gm.empty())
                       for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
                     if (!ctx.wants(1) && !ctx.wants(2)) return;
                     double total = 0.0;
                     for (double v : g) total += v;
                     if (auto gd = ctx.grad_in(1); !gd.empty()) gd[0] -= 0.5 * total;
                     if (auto gs = ctx.grad_in(2); !gs.empty()) gs[0] += 0.5 * total;
                   });
}

}  // namespace codeq::ad
