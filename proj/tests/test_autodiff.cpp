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

#include <cmath>
#include <cstring>

#include "codeq/autodiff.hpp"
#include "codeq/error.hpp"
#include "support/gradcheck.hpp"

namespace codeq {
namespace {

using ad::Tape;
using ad::Var;
using testing::gradcheck;
using testing::random_tensor;

constexpr double kTol = 1e-5;

double grad_of(double x0, Var (*op)(Var)) {
  Tape tape;
  Var x = tape.scalar(x0, true);
  tape.backward(ad::sum(op(x)));
  return tape.grad(x)[0];
}

// --- straight-through nodes -----------------------------------------------

TEST(SteRound, RoundsHalfToEvenAndPassesGradient) {
  Tape tape;
  Var x = tape.leaf(Tensor({5}, {2.25, 0.5, 1.5, 2.5, -0.5}), true);
  Var y = ad::ste_round(x);
  EXPECT_EQ(y.value(), (std::vector<double>{2.0, 0.0, 2.0, 2.0, 0.0}));
  // -0.5 rounds to +0, not -0.
  EXPECT_FALSE(std::signbit(y.value()[4]));
  tape.backward(ad::sum(y));
  for (double g : tape.grad(x)) EXPECT_EQ(g, 1.0);
}

TEST(SteRelu, ForwardClampsButGradientPassesEverywhere) {
  Tape tape;
  Var x = tape.leaf(Tensor({3}, {-0.08, 0.72, 0.0}), true);
  Var y = ad::ste_relu(x);
  EXPECT_EQ(y.value(), (std::vector<double>{0.0, 0.72, 0.0}));
  tape.backward(ad::sum(y));
  for (double g : tape.grad(x)) EXPECT_EQ(g, 1.0);
}

TEST(SteClip, IdentityGradientEvenWhenSaturated) {
  Tape tape;
  Var x = tape.leaf(Tensor({2}, {5.0, 1.0}), true);
  Var y = ad::ste_clip(x, -3.0, 3.0);
  EXPECT_EQ(y.value(), (std::vector<double>{3.0, 1.0}));
  tape.backward(ad::sum(y));
  EXPECT_EQ(tape.grad(x)[0], 1.0);
  EXPECT_EQ(tape.grad(x)[1], 1.0);
}

TEST(MaskedClip, GradientMaskedOutsideRange) {
  Tape tape;
  Var x = tape.leaf(Tensor({2}, {5.0, 1.0}), true);
  Var y = ad::masked_clip(x, -3.0, 3.0);
  EXPECT_EQ(y.value()[0], 3.0);
  tape.backward(ad::sum(y));
  EXPECT_EQ(tape.grad(x)[0], 0.0);
  EXPECT_EQ(tape.grad(x)[1], 1.0);
}

TEST(SteClip, RejectsInvertedRange) {
  Tape tape;
  Var x = tape.scalar(1.0);
  EXPECT_THROW(ad::ste_clip(x, 1.0, -1.0), DomainError);
  EXPECT_THROW(ad::masked_clip(x, 1.0, -1.0), DomainError);
}

TEST(ZeroGradSign, SignValuesWithZeroGradient) {
  Tape tape;
  Var x = tape.leaf(Tensor({3}, {-1.2, 0.0, 0.86}), true);
  Var y = ad::zero_grad_sign(x);
  EXPECT_EQ(y.value(), (std::vector<double>{-1.0, 0.0, 1.0}));
  // Combine with a differentiable path so the loss itself requires grad.
  tape.backward(ad::sum(ad::add(y, ad::scale(x, 0.0))));
  for (double g : tape.grad(x)) EXPECT_EQ(g, 0.0);
}

TEST(StopGradient, ProductRuleSeesOnlyOneFactor) {
  Tape tape;
  Var x = tape.scalar(3.0, true);
  Var y = ad::mul(x, ad::stop_gradient(x));
  EXPECT_EQ(y.item(), 9.0);
  tape.backward(y);
  EXPECT_EQ(tape.grad(x)[0], 3.0);
}

TEST(StopGradient, ConstantIsNoOp) {
  Tape tape;
  Var c = tape.scalar(4.0);
  Var y = ad::stop_gradient(c);
  EXPECT_EQ(y.item(), 4.0);
  EXPECT_FALSE(y.requires_grad());
}

// Each straight-through node's backward must be the derivative of its
// surrogate. Check by finite differences of the surrogate composition around
// a smooth inner function.
TEST(SteSurrogates, MatchFiniteDifferencesOfSurrogate) {
  std::mt19937_64 rng(11);
  const Tensor x0 = random_tensor({12}, rng);
  struct Case {
    const char* name;
    Var (*ste)(Var);
    Var (*surrogate)(Var);
  };
  const Case cases[] = {
      {"round", [](Var v) { return ad::ste_round(v); }, [](Var v) { return v; }},
      {"relu", [](Var v) { return ad::ste_relu(v); }, [](Var v) { return v; }},
      {"clip", [](Var v) { return ad::ste_clip(v, -0.3, 0.3); }, [](Var v) { return v; }},
      {"sign",
       [](Var v) { return ad::add(ad::zero_grad_sign(v), ad::scale(v, 1e-3)); },
       [](Var v) { return ad::scale(v, 1e-3); }},
  };
  for (const auto& c : cases) {
    Tape tape;
    Var x = tape.leaf(x0, true);
    Var out = ad::mul(c.ste(ad::tanh(x)), ad::tanh(x));
    tape.backward(ad::sum(out));
    const auto analytic = tape.grad(x);

    // Surrogate with the forward-only parts frozen at the base point.
    Tape base;
    const auto frozen = c.ste(ad::tanh(base.constant(x0))).value();
    const auto surrogate_at = [&](const Tensor& xs) {
      Tape t;
      Var v = ad::tanh(t.constant(xs));
      Var s = c.surrogate(v);
      double total = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double offset = frozen[i] - c.surrogate(ad::tanh(base.constant(x0))).value()[i];
        total += (s.value()[i] + offset) * v.value()[i];
      }
      return total;
    };
    for (std::size_t i = 0; i < x0.size(); ++i) {
      Tensor plus = x0, minus = x0;
      plus[i] += 1e-6;
      minus[i] -= 1e-6;
      const double numeric = (surrogate_at(plus) - surrogate_at(minus)) / 2e-6;
      EXPECT_LT(testing::relative_error(analytic[i], numeric, 1e-6), kTol) << c.name << " @" << i;
    }
  }
}

// --- backward contract ----------------------------------------------------

TEST(Backward, LinearSum) {
  Tape tape;
  Var w = tape.leaf(Tensor({3}, {0.3, -1.0, 2.0}), true);
  tape.backward(ad::sum(ad::scale(w, 2.0)));
  for (double g : tape.grad(w)) EXPECT_EQ(g, 2.0);
}

TEST(Backward, RoundedSumHasUnitGradient) {
  Tape tape;
  Var w = tape.leaf(Tensor({4}, {0.2, -1.7, 3.5, 0.49}), true);
  tape.backward(ad::sum(ad::ste_round(w)));
  for (double g : tape.grad(w)) EXPECT_EQ(g, 1.0);
}

TEST(Backward, SquaredNorm) {
  Tape tape;
  Var w = tape.leaf(Tensor({2}, {1.0, -2.0}), true);
  tape.backward(ad::sum(ad::mul(w, w)));
  EXPECT_EQ(tape.grad(w)[0], 2.0);
  EXPECT_EQ(tape.grad(w)[1], -4.0);
}

TEST(Backward, NonScalarLossIsShapeError) {
  Tape tape;
  Var w = tape.leaf(Tensor({2}, {1.0, 2.0}), true);
  EXPECT_THROW(tape.backward(w), ShapeError);
}

TEST(Backward, UnreachableNodesHoldZero) {
  Tape tape;
  Var a = tape.leaf(Tensor({2}, {1.0, 2.0}), true);
  Var b = tape.leaf(Tensor({2}, {3.0, 4.0}), true);
  tape.backward(ad::sum(a));
  EXPECT_EQ(tape.grad(b)[0], 0.0);
  EXPECT_EQ(tape.grad(b)[1], 0.0);
}

TEST(Backward, ConstantsNeverAccumulate) {
  Tape tape;
  Var a = tape.leaf(Tensor({2}, {1.0, 2.0}), true);
  Var c = tape.constant(Tensor({2}, {3.0, 4.0}));
  tape.backward(ad::sum(ad::mul(a, c)));
  EXPECT_TRUE(tape.node(c.id()).grad.empty());
}

TEST(Backward, SharedNodeSumsBothConsumers) {
  Tape tape;
  Var x = tape.scalar(0.7, true);
  Var y = ad::add(ad::mul(x, x), ad::tanh(x));
  tape.backward(y);
  const double t = std::tanh(0.7);
  EXPECT_NEAR(tape.grad(x)[0], 2 * 0.7 + (1 - t * t), 1e-15);
}

TEST(Backward, SecondPassAccumulatesUntilReset) {
  Tape tape;
  Var x = tape.leaf(Tensor({2}, {1.5, -0.5}), true);
  Var loss = ad::sum(ad::mul(x, ad::tanh(x)));
  tape.backward(loss);
  const std::vector<double> once(tape.grad(x).begin(), tape.grad(x).end());
  tape.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_DOUBLE_EQ(tape.grad(x)[i], 2.0 * once[i]);
  tape.zero_grad();
  tape.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(tape.grad(x)[i], once[i]);
}

TEST(Backward, DeterministicAcrossRuns) {
  auto run = [] {
    std::mt19937_64 rng(5);
    Tape tape;
    Var a = tape.leaf(random_tensor({7, 9}, rng), true);
    Var b = tape.leaf(random_tensor({9, 4}, rng), true);
    Var y = ad::tanh(ad::matmul(a, b));
    tape.backward(ad::sum_squares(y));
    std::vector<double> out(tape.grad(a).begin(), tape.grad(a).end());
    out.insert(out.end(), tape.grad(b).begin(), tape.grad(b).end());
    out.insert(out.end(), y.value().begin(), y.value().end());
    return out;
  };
  const auto first = run();
  const auto second = run();
  ASSERT_EQ(first.size(), second.size());
  EXPECT_EQ(std::memcmp(first.data(), second.data(), first.size() * sizeof(double)), 0);
}

TEST(Ops, MismatchedShapesThrow) {
  Tape tape;
  Var a = tape.constant(Tensor({2, 3}));
  Var b = tape.constant(Tensor({3, 2}));
  EXPECT_THROW(ad::add(a, b), ShapeError);
  EXPECT_THROW(ad::matmul(a, a), ShapeError);
}

TEST(Ops, CrossEntropyRejectsBadLabel) {
  Tape tape;
  Var logits = tape.constant(Tensor({1, 3}));
  const int label = 3;
  EXPECT_THROW(ad::softmax_cross_entropy(logits, std::span<const int>(&label, 1)), DomainError);
}

// --- finite differences for every smooth primitive ------------------------

class GradCheck : public ::testing::Test {
 protected:
  std::mt19937_64 rng{2024};
};

TEST_F(GradCheck, ElementwiseBinary) {
  const Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({3, 4}, rng, 0.5, 2.0);
  const Tensor s = random_tensor({1}, rng, 0.5, 2.0);
  using Fn = Var (*)(Var, Var);
  for (Fn op : {Fn(ad::add), Fn(ad::sub), Fn(ad::mul), Fn(ad::div)}) {
    EXPECT_LT(gradcheck({a, b}, [op](Tape&, const auto& v) { return op(v[0], v[1]); }).max_rel_error, kTol);
    EXPECT_LT(gradcheck({a, s}, [op](Tape&, const auto& v) { return op(v[0], v[1]); }).max_rel_error, kTol);
    EXPECT_LT(gradcheck({s, b}, [op](Tape&, const auto& v) { return op(v[0], v[1]); }).max_rel_error, kTol);
  }
}

TEST_F(GradCheck, ElementwiseUnary) {
  const Tensor x = random_tensor({17}, rng);
  using Fn = Var (*)(Var);
  const Fn ops[] = {
      ad::abs, ad::tanh, ad::pow2, ad::relu, ad::square, ad::neg,
      [](Var v) { return ad::scale(v, -1.7); },
      [](Var v) { return ad::add_scalar(v, 0.3); },
  };
  for (Fn op : ops) {
    EXPECT_LT(gradcheck({x}, [op](Tape&, const auto& v) { return op(v[0]); }).max_rel_error, kTol);
  }
}

TEST_F(GradCheck, Reductions) {
  const Tensor x = random_tensor({4, 5}, rng);
  using Fn = Var (*)(Var);
  for (Fn op : {Fn(ad::sum), Fn(ad::mean), Fn(ad::sum_squares), Fn(ad::max_reduce)}) {
    EXPECT_LT(gradcheck({x}, [op](Tape&, const auto& v) { return op(v[0]); }).max_rel_error, kTol);
  }
}

TEST_F(GradCheck, Matmul) {
  const Tensor a = random_tensor({3, 5}, rng);
  const Tensor b = random_tensor({5, 4}, rng);
  const Tensor bt = random_tensor({4, 5}, rng);
  EXPECT_LT(gradcheck({a, b}, [](Tape&, const auto& v) { return ad::matmul(v[0], v[1]); }).max_rel_error, kTol);
  EXPECT_LT(gradcheck({a, bt}, [](Tape&, const auto& v) { return ad::matmul_nt(v[0], v[1]); }).max_rel_error, kTol);
}

TEST_F(GradCheck, Biases) {
  const Tensor x2 = random_tensor({3, 4}, rng);
  const Tensor b4 = random_tensor({4}, rng);
  const Tensor x4 = random_tensor({2, 3, 2, 2}, rng);
  const Tensor b3 = random_tensor({3}, rng);
  EXPECT_LT(gradcheck({x2, b4}, [](Tape&, const auto& v) { return ad::add_row_bias(v[0], v[1]); }).max_rel_error, kTol);
  EXPECT_LT(gradcheck({x4, b3}, [](Tape&, const auto& v) { return ad::add_channel_bias(v[0], v[1]); }).max_rel_error, kTol);
}

TEST_F(GradCheck, Conv2dStrideAndPadding) {
  const Tensor x = random_tensor({2, 2, 5, 6}, rng);
  const Tensor w = random_tensor({3, 2, 3, 3}, rng);
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t pad : {0u, 1u}) {
      const auto r = gradcheck({x, w}, [stride, pad](Tape&, const auto& v) {
        return ad::conv2d(v[0], v[1], stride, pad);
      });
      EXPECT_LT(r.max_rel_error, kTol) << "stride " << stride << " pad " << pad;
    }
  }
}

TEST_F(GradCheck, MaxPoolAndReshape) {
  const Tensor x = random_tensor({2, 2, 5, 4}, rng);
  EXPECT_LT(gradcheck({x}, [](Tape&, const auto& v) { return ad::maxpool2d(v[0], 2); }).max_rel_error, kTol);
  EXPECT_LT(gradcheck({x}, [](Tape&, const auto& v) { return ad::reshape(v[0], {4, 20}); }).max_rel_error, kTol);
}

TEST_F(GradCheck, SoftmaxCrossEntropy) {
  const Tensor logits = random_tensor({4, 5}, rng);
  const std::vector<int> labels = {0, 4, 2, 2};
  EXPECT_LT(gradcheck({logits}, [&](Tape&, const auto& v) {
              return ad::softmax_cross_entropy(v[0], labels);
            }).max_rel_error,
            kTol);
}

TEST_F(GradCheck, ShiftByHalfwidths) {
  const Tensor mag = random_tensor({6}, rng, 0.0, 2.0);
  const Tensor d = random_tensor({1}, rng, 0.0, 1.0);
  const Tensor s = random_tensor({1}, rng, 0.1, 1.0);
  EXPECT_LT(gradcheck({mag, d, s}, [](Tape&, const auto& v) {
              return ad::shift_by_halfwidths(v[0], v[1], v[2]);
            }).max_rel_error,
            kTol);
}

TEST(Ops, ShiftByHalfwidthsHitsEdgeExactly) {
  Tape tape;
  const double d = 0.7, s = 0.34;
  Var y = ad::shift_by_halfwidths(tape.constant(Tensor({2}, {d / 2, 0.9})), tape.scalar(d),
                                  tape.scalar(s));
  EXPECT_EQ(y.value()[0], s / 2);
  // Reduction case: d == s leaves magnitudes untouched.
  Var z = ad::shift_by_halfwidths(tape.constant(Tensor({1}, {0.123456789})), tape.scalar(s),
                                  tape.scalar(s));
  EXPECT_EQ(z.value()[0], 0.123456789);
}

TEST(Ops, AbsSubgradientIsZeroAtZero) { EXPECT_EQ(grad_of(0.0, ad::abs), 0.0); }

TEST(Ops, Pow2) {
  Tape tape;
  Var x = tape.leaf(Tensor({2}, {3.0, -1.0}), true);
  Var y = ad::pow2(x);
  EXPECT_EQ(y.value(), (std::vector<double>{8.0, 0.5}));
  tape.backward(ad::sum(y));
  EXPECT_NEAR(tape.grad(x)[0], 8.0 * std::log(2.0), 1e-15);
}

}  // namespace
}  // namespace codeq
