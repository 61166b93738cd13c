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

// Reverse-mode differentiation over dense double tensors.
//
// A Tape records nodes in creation order, which is always a topological order
// of the graph. Tapes are cheap and meant to be rebuilt on every forward pass.
// backward() adds d(loss)/d(node) into the persistent grad buffer of every
// node that requires grad; calling it twice without zero_grad() accumulates.
//
// Besides the ordinary differentiable primitives, the straight-through nodes
// used by the dead-zone quantizer are provided:
//
//   ste_round       round half to even, identity backward
//   ste_relu        max(x, 0), identity backward
//   ste_clip        clip to [lo, hi], identity backward
//   masked_clip     clip to [lo, hi], gradient masked outside the range
//   zero_grad_sign  sign in {-1, 0, 1}, zero backward
//   stop_gradient   identity forward, zero backward

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "codeq/tensor.hpp"

namespace codeq::ad {

using NodeId = std::size_t;

class Tape;
class BackwardContext;

using BackwardFn = std::function<void(const BackwardContext&)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::string op;
  std::vector<NodeId> inputs;
  BackwardFn backward;
};

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  NodeId id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Node& node() const;
  const Shape& shape() const { return node().shape; }
  const std::vector<double>& value() const { return node().value; }
  std::size_t size() const { return node().value.size(); }
  bool requires_grad() const { return node().requires_grad; }
  /// Value of a one-element node.
  double item() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

class BackwardContext {
 public:
  BackwardContext(Tape& tape, std::vector<std::vector<double>>& adjoints, NodeId self)
      : tape_(tape), adjoints_(adjoints), self_(self) {}

  std::span<const double> grad_out() const { return adjoints_[self_]; }
  const Node& node() const;
  const Node& input(std::size_t k) const;
  bool wants(std::size_t k) const;
  /// Adjoint buffer of input k; empty when that input needs no gradient.
  std::span<double> grad_in(std::size_t k) const;

 private:
  Tape& tape_;
  std::vector<std::vector<double>>& adjoints_;
  NodeId self_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(const Tensor& t, bool requires_grad);
  Var constant(const Tensor& t) { return leaf(t, false); }
  Var scalar(double v, bool requires_grad = false) { return leaf(Tensor::scalar(v), requires_grad); }

  /// Records a node computed from `inputs`. The backward rule is dropped when
  /// no input requires grad.
  Var push(std::string op, Shape shape, std::vector<double> value, std::vector<NodeId> inputs,
           BackwardFn backward);

  /// Accumulates d(loss)/d(node) into every reachable requires-grad node.
  /// Throws ShapeError unless loss has exactly one element.
  void backward(Var loss);

  /// Accumulated gradient of v (zeros if nothing reached it).
  std::span<const double> grad(Var v);
  void zero_grad();

  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

// Element-wise binary ops accept equal shapes or a one-element operand on
// either side (broadcast).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);

Var abs(Var a);  // subgradient sign(x), 0 at 0
Var tanh(Var a);
Var pow2(Var a);  // 2^x
Var relu(Var a);
Var square(Var a);

Var sum(Var a);
Var mean(Var a);
Var sum_squares(Var a);
Var max_reduce(Var a);  // gradient to the first maximal element

/// a[m,k] * b[k,n]
Var matmul(Var a, Var b);
/// a[m,k] * b[n,k]^T, the layout of a linear layer's weight.
Var matmul_nt(Var a, Var b);
/// x[n,c] + bias[c]
Var add_row_bias(Var x, Var bias);
/// x[n,c,h,w] + bias[c]
Var add_channel_bias(Var x, Var bias);
/// x[n,c,h,w] * w[o,c,kh,kw] -> [n,o,oh,ow], via im2col.
Var conv2d(Var x, Var w, std::size_t stride, std::size_t padding);
/// Non-overlapping k x k max pooling with floor semantics.
Var maxpool2d(Var x, std::size_t k);
Var reshape(Var a, Shape shape);

/// Mean over the batch of -log softmax(logits)[label]. logits [n,c].
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

Var ste_round(Var a);
Var ste_relu(Var a);
Var ste_clip(Var a, double lo, double hi);
Var masked_clip(Var a, double lo, double hi);
Var zero_grad_sign(Var a);
Var stop_gradient(Var a);

/// mag - (d/2 - s/2), rounded once. Gradient (1, -1/2, +1/2) w.r.t.
/// (mag, d, s); d and s are one-element nodes.
Var shift_by_halfwidths(Var mag, Var d, Var s);

/// Round half to even; the single rounding rule used everywhere. Zero results
/// are canonicalized to +0.
double round_half_even(double x) noexcept;

}  // namespace codeq::ad
