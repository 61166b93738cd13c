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

#include "codeq/trainer.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "codeq/error.hpp"
#include "codeq/metrics.hpp"

namespace codeq {

void TrainConfig::validate() const {
  if (!(lambda_dz >= 0.0) || !(lambda_bit >= 0.0) || !(lambda_w >= 0.0)) {
    throw DomainError("regularization strengths must be >= 0");
  }
  if (!(lr_weights > 0.0) || !(lr_theta >= 0.0)) throw DomainError("learning rates must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0) || !(theta_momentum >= 0.0 && theta_momentum < 1.0)) {
    throw DomainError("momentum must be in [0, 1)");
  }
  if (epochs == 0 || batch_size == 0) throw DomainError("epochs and batch_size must be >= 1");
  if (quant.precision == Precision::fixed_bit && (quant.bits < 2 || quant.bits > 16)) {
    throw DomainError("fixed bit-width must be in [2, 16]");
  }
  if (quant.b_min < 2 || quant.b_max > 16 || quant.b_min > quant.b_max) {
    throw DomainError("bit bounds must satisfy 2 <= b_min <= b_max <= 16");
  }
  if (!(quant.quantile > 0.0 && quant.quantile <= 1.0)) throw DomainError("quantile must be in (0, 1]");
  if (!(quant.epsilon > 0.0)) throw DomainError("epsilon must be > 0");
}

ad::Var codeq_loss(ad::Var task_loss, std::span<const LayerParams> params, const TrainConfig& cfg) {
  ad::Var total = task_loss;
  for (const auto& p : params) {
    if (cfg.lambda_dz != 0.0 && p.theta_dz.valid()) {
      total = ad::add(total, ad::scale(ad::square(p.theta_dz), cfg.lambda_dz));
    }
    if (cfg.lambda_bit != 0.0 && p.theta_bit) {
      total = ad::add(total, ad::scale(ad::square(*p.theta_bit), cfg.lambda_bit));
    }
    if (cfg.lambda_w != 0.0) {
      total = ad::add(total, ad::scale(ad::sum_squares(p.weight), cfg.lambda_w));
    }
  }
  return total;
}

void sgd_update(std::span<double> param, std::span<const double> grad, std::vector<double>& velocity,
                double lr, double momentum) {
  if (grad.size() != param.size()) {
    throw DomainError("missing or mismatched gradient (" + std::to_string(grad.size()) + " vs " +
                      std::to_string(param.size()) + " parameters)");
  }
  if (velocity.size() != param.size()) velocity.assign(param.size(), 0.0);
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    param[i] -= lr * velocity[i];
  }
}

double cosine_lr(double base, std::size_t epoch, std::size_t epochs) {
  if (epochs == 0) return base;
  return base * 0.5 *
         (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(epochs)));
}

ForwardMode mode_for(const Model& model) {
  for (const auto& l : model.layers) {
    if (l.quant) return ForwardMode::codeq;
  }
  return ForwardMode::fp32;
}

namespace {

std::size_t count_correct(const ad::Var& logits, const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  const std::size_t k = logits.size() / n;
  const auto& v = logits.value();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (v[i * k + j] > v[i * k + best]) best = j;
    }
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return correct;
}

struct Velocities {
  std::vector<double> weight, bias, theta_dz, theta_bit;
};

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (epoch + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

double evaluate(const Model& model, const Dataset& data, ForwardMode mode, std::size_t batch_size) {
  if (data.size() == 0) throw DomainError("cannot evaluate on an empty dataset");
  std::size_t correct = 0;
  for (const auto& idx : batch_indices(data.size(), batch_size, std::nullopt)) {
    const Batch b = gather(data, idx);
    ad::Tape tape;
    const ForwardResult fr = forward(tape, model, b.features, mode, false);
    correct += count_correct(fr.logits, b.labels);
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

History train(Model& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
              const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.size() == 0) throw DomainError("training set is empty");
  const ForwardMode mode = mode_for(model);
  std::vector<Velocities> vel(model.layers.size());
  History history;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr_w = cfg.cosine ? cosine_lr(cfg.lr_weights, epoch, cfg.epochs) : cfg.lr_weights;
    double loss_sum = 0.0, task_sum = 0.0;
    std::size_t correct = 0, batches = 0;
    for (const auto& idx : batch_indices(train_set.size(), cfg.batch_size, epoch_seed(cfg.seed, epoch))) {
      const Batch b = gather(train_set, idx);
      ad::Tape tape;
      const ForwardResult fr = forward(tape, model, b.features, mode, true);
      ad::Var task = ad::softmax_cross_entropy(fr.logits, b.labels);
      ad::Var loss = codeq_loss(task, fr.params, cfg);
      if (!std::isfinite(loss.item())) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch + 1 << ", batch " << batches + 1
           << " (task loss " << task.item() << ", total " << loss.item() << ")";
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
          if (model.layers[l].quant) {
            os << "; " << model.layers[l].spec.name << " theta_dz " << model.layers[l].quant->theta_dz;
          }
        }
        throw DivergenceError(os.str());
      }
      tape.backward(loss);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Layer& layer = model.layers[l];
        const LayerParams& p = fr.params[l];
        sgd_update(layer.weight.data(), tape.grad(p.weight), vel[l].weight, lr_w, cfg.momentum);
        if (layer.spec.has_bias) {
          sgd_update(layer.bias.data(), tape.grad(p.bias), vel[l].bias, lr_w, cfg.momentum);
        }
        if (mode == ForwardMode::codeq && layer.quant) {
          sgd_update(std::span<double>(&layer.quant->theta_dz, 1), tape.grad(p.theta_dz), vel[l].theta_dz,
                     cfg.lr_theta, cfg.theta_momentum);
          if (p.theta_bit) {
            sgd_update(std::span<double>(&*layer.quant->theta_bit, 1), tape.grad(*p.theta_bit),
                       vel[l].theta_bit, cfg.lr_theta, cfg.theta_momentum);
          }
        }
      }
      loss_sum += loss.item();
      task_sum += task.item();
      correct += count_correct(fr.logits, b.labels);
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr_weights = lr_w;
    rec.loss = loss_sum / static_cast<double>(batches);
    rec.task_loss = task_sum / static_cast<double>(batches);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    rec.val_acc = val_set.size() > 0 ? evaluate(model, val_set, mode) : 0.0;
    const CompressionReport rep = build_report(model);
    rec.overall_sparsity = rep.overall_sparsity;
    rec.mean_bits = rep.mean_bits;
    for (const auto& lr : rep.layers) {
      rec.layers.push_back({lr.name, static_cast<double>(lr.zeros) / static_cast<double>(lr.params), lr.bits, lr.deadzone, lr.scale, lr.theta_dz,
                            lr.theta_bit});
    }
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return history;
}

}  // namespace codeq
