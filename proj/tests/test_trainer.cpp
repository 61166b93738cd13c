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
#include <numbers>

#include "codeq/error.hpp"
#include "codeq/metrics.hpp"
#include "codeq/pruning.hpp"
#include "codeq/trainer.hpp"

namespace codeq {
namespace {

LayerParams params_on(ad::Tape& tape, double theta_dz, std::optional<double> theta_bit,
                      std::vector<double> w = {0.0}) {
  LayerParams p;
  p.weight = tape.leaf(Tensor({w.size()}, w), true);
  p.theta_dz = tape.scalar(theta_dz, true);
  if (theta_bit) p.theta_bit = tape.scalar(*theta_bit, true);
  return p;
}

TEST(CodeqLoss, DeadZoneExample) {
  ad::Tape tape;
  const std::vector<LayerParams> ps = {params_on(tape, 3.0, std::nullopt)};
  TrainConfig cfg;
  cfg.lambda_dz = 0.01;
  EXPECT_NEAR(codeq_loss(tape.scalar(1.0), ps, cfg).item(), 1.09, 1e-15);
}

TEST(CodeqLoss, ZeroStrengthsAreIdentity) {
  ad::Tape tape;
  const std::vector<LayerParams> ps = {params_on(tape, 3.0, 2.0, {1.0, -2.0})};
  EXPECT_EQ(codeq_loss(tape.scalar(0.731), ps, TrainConfig{}).item(), 0.731);
}

TEST(CodeqLoss, RegularizerGradients) {
  ad::Tape tape;
  const std::vector<LayerParams> ps = {params_on(tape, 1.5, -0.5, {1.0, -2.0}), params_on(tape, -2.0, std::nullopt)};
  TrainConfig cfg;
  cfg.lambda_dz = 0.1;
  cfg.lambda_bit = 0.75;
  cfg.lambda_w = 0.01;
  const ad::Var loss = codeq_loss(tape.scalar(0.0), ps, cfg);
  EXPECT_NEAR(loss.item(), 0.1 * (2.25 + 4.0) + 0.75 * 0.25 + 0.01 * 5.0, 1e-15);
  tape.backward(loss);
  EXPECT_NEAR(tape.grad(ps[0].theta_dz)[0], 2 * 0.1 * 1.5, 1e-15);
  EXPECT_NEAR(tape.grad(ps[1].theta_dz)[0], 2 * 0.1 * -2.0, 1e-15);
  EXPECT_NEAR(tape.grad(*ps[0].theta_bit)[0], 2 * 0.75 * -0.5, 1e-15);
  EXPECT_NEAR(tape.grad(ps[0].weight)[1], 2 * 0.01 * -2.0, 1e-15);
}

TEST(Sgd, PlainStep) {
  std::vector<double> w = {1.0}, v;
  sgd_update(w, std::vector<double>{2.0}, v, 0.1, 0.0);
  EXPECT_NEAR(w[0], 0.8, 1e-15);
}

TEST(Sgd, MomentumRecursion) {
  std::vector<double> w = {0.0}, v;
  sgd_update(w, std::vector<double>{1.0}, v, 0.1, 0.9);
  const double before = w[0];
  sgd_update(w, std::vector<double>{1.0}, v, 0.1, 0.9);
  EXPECT_NEAR(v[0], 1.9, 1e-15);
  EXPECT_NEAR(before - w[0], 0.19, 1e-15);
}

TEST(Sgd, MissingGradient) {
  std::vector<double> w = {1.0, 2.0}, v;
  EXPECT_THROW(sgd_update(w, std::vector<double>{}, v, 0.1, 0.0), DomainError);
}

TEST(Cosine, Schedule) {
  EXPECT_EQ(cosine_lr(0.1, 0, 10), 0.1);
  EXPECT_NEAR(cosine_lr(0.1, 5, 10), 0.05, 1e-15);
  EXPECT_NEAR(cosine_lr(0.1, 3, 10), 0.05 * (1 + std::cos(std::numbers::pi * 0.3)), 1e-15);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.validate();
  c.lambda_dz = -1;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.quant.b_min = 9;
  EXPECT_THROW(c.validate(), DomainError);
}

struct Fixture {
  Dataset train_set, val_set;
  Fixture(std::size_t n = 400, std::size_t dims = 16, std::size_t classes = 4, double spread = 0.6) {
    std::tie(train_set, val_set) = split_tail(synthetic_blobs(n, dims, classes, spread, 3), n / 4);
  }
};

TrainConfig small_cfg(Precision precision) {
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 32;
  c.seed = 5;
  c.lr_theta = 0.2;
  c.quant.precision = precision;
  return c;
}

History run(Precision precision, TrainConfig cfg, Model* out = nullptr, std::vector<std::size_t> hidden = {16}) {
  Fixture f;
  Model m = build_mlp(f.train_set.sample_size(), hidden, f.train_set.num_classes, cfg.seed);
  cfg.quant.precision = precision;
  apply_quant_config(m, cfg.quant);
  History h = train(m, f.train_set, f.val_set, cfg);
  if (out) *out = m;
  return h;
}

TEST(Train, DeterministicHistory) {
  TrainConfig cfg = small_cfg(Precision::fixed_bit);
  cfg.lambda_dz = 0.01;
  Model a, b;
  const History ha = run(Precision::fixed_bit, cfg, &a);
  const History hb = run(Precision::fixed_bit, cfg, &b);
  ASSERT_EQ(ha.epochs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(ha.epochs[e].loss, hb.epochs[e].loss);
    EXPECT_EQ(ha.epochs[e].val_acc, hb.epochs[e].val_acc);
    EXPECT_EQ(ha.epochs[e].overall_sparsity, hb.epochs[e].overall_sparsity);
  }
  EXPECT_EQ(a.layers[0].weight.values(), b.layers[0].weight.values());
  EXPECT_EQ(a.layers[0].quant->theta_dz, b.layers[0].quant->theta_dz);
}

TEST(Train, LoggedSparsityMatchesQuantizerOutput) {
  TrainConfig cfg = small_cfg(Precision::fixed_bit);
  cfg.lambda_dz = 0.1;
  Model m;
  const History h = run(Precision::fixed_bit, cfg, &m);
  const auto& last = h.epochs.back();
  double zeros = 0.0, total = 0.0;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    ad::Tape tape;
    const auto q = quantize_layer(tape.constant(m.layers[i].weight), *m.layers[i].quant);
    EXPECT_EQ(last.layers[i].sparsity, sparsity(q.w_hat.value()));
    EXPECT_EQ(last.layers[i].bits, q.bits);
    zeros += sparsity(q.w_hat.value()) * static_cast<double>(q.w_hat.size());
    total += static_cast<double>(q.w_hat.size());
  }
  EXPECT_NEAR(last.overall_sparsity, zeros / total, 1e-15);
  EXPECT_GT(last.overall_sparsity, 0.0);
}

TEST(Train, MixedPrecisionBitsStayInRange) {
  for (double lambda_bit : {0.0, 0.75, 5.0}) {
    TrainConfig cfg = small_cfg(Precision::mixed);
    cfg.lambda_bit = lambda_bit;
    cfg.lr_theta = 1.0;
    for (const auto& e : run(Precision::mixed, cfg).epochs) {
      for (const auto& l : e.layers) {
        EXPECT_GE(l.bits, 2);
        EXPECT_LE(l.bits, 8);
        ASSERT_TRUE(l.theta_bit.has_value());
      }
    }
  }
}

TEST(Train, NoDeadZonePressureKeepsSparsityLow) {
  TrainConfig cfg = small_cfg(Precision::fixed_bit);
  cfg.lambda_dz = 0.0;
  EXPECT_LT(run(Precision::fixed_bit, cfg).epochs.back().overall_sparsity, 0.05);
}

TEST(Train, DistinctRatesPerGroup) {
  Fixture f;
  TrainConfig cfg = small_cfg(Precision::fixed_bit);
  cfg.epochs = 1;
  cfg.lambda_dz = 0.5;
  Model m = build_mlp(f.train_set.sample_size(), {8}, f.train_set.num_classes, 1);
  apply_quant_config(m, cfg.quant);
  cfg.lr_theta = 0.0;
  Model frozen_theta = m;
  train(frozen_theta, f.train_set, f.val_set, cfg);
  EXPECT_EQ(frozen_theta.layers[0].quant->theta_dz, 3.0);
  EXPECT_NE(frozen_theta.layers[0].weight.values(), m.layers[0].weight.values());
  cfg.lr_theta = 0.05;
  Model moving = m;
  train(moving, f.train_set, f.val_set, cfg);
  EXPECT_LT(moving.layers[0].quant->theta_dz, 3.0);
}

TEST(Train, DivergenceIsReported) {
  Fixture f(200, 16, 4, 5.0);
  TrainConfig cfg = small_cfg(Precision::full);
  cfg.lr_weights = 1e200;
  Model m = build_mlp(f.train_set.sample_size(), {16}, f.train_set.num_classes, 1);
  apply_quant_config(m, cfg.quant);
  try {
    train(m, f.train_set, f.val_set, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(Train, FitsSeparableBlobs) {
  const auto [tr, va] = split_tail(synthetic_blobs(1000, 2, 4, 0.1, 7), 200);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.quant.precision = Precision::full;
  Model m = build_mlp(2, {16}, 4, 0);
  apply_quant_config(m, cfg.quant);
  const History h = train(m, tr, va, cfg);
  EXPECT_GT(evaluate(m, tr, ForwardMode::fp32), 0.99);
  EXPECT_GT(h.epochs.back().val_acc, 0.99);
}

// One small SGD step on the task loss alone lowers that loss on the same
// batch, on average over seeds.
TEST(TrainProperty, SmallStepDescends) {
  double total_drop = 0.0;
  int drops = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset d = synthetic_blobs(64, 8, 3, 0.5, seed);
    Model m = build_mlp(8, {12}, 3, seed);
    QuantConfig q;
    apply_quant_config(m, q);
    const Batch b = gather(d, batch_indices(64, 64, std::nullopt)[0]);
    auto task_loss = [&](const Model& model, ad::Tape& tape, ForwardResult& r) {
      r = forward(tape, model, b.features, ForwardMode::codeq, true);
      return ad::softmax_cross_entropy(r.logits, b.labels);
    };
    ad::Tape tape;
    ForwardResult r;
    const ad::Var loss = task_loss(m, tape, r);
    tape.backward(loss);
    Model stepped = m;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
      std::vector<double> v;
      sgd_update(stepped.layers[i].weight.values(), tape.grad(r.params[i].weight), v, 1e-3, 0.0);
      sgd_update(stepped.layers[i].bias.values(), tape.grad(r.params[i].bias), v, 1e-3, 0.0);
    }
    ad::Tape tape2;
    ForwardResult r2;
    const double after = task_loss(stepped, tape2, r2).item();
    total_drop += loss.item() - after;
    drops += after < loss.item();
  }
  EXPECT_GT(total_drop, 0.0);
  EXPECT_GE(drops, 15);
}

}  // namespace
}  // namespace codeq
