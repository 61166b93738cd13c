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

// Training loop. Each step rebuilds the tape: quantize every layer, add the
// regularizers to the cross-entropy, backpropagate, then update weights with
// SGD + momentum (cosine-annealed per epoch) and theta parameters with plain
// SGD at a constant rate.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codeq/data.hpp"
#include "codeq/models.hpp"

namespace codeq {

struct TrainConfig {
  double lambda_dz = 0.0;
  double lambda_bit = 0.0;
  double lambda_w = 0.0;
  double lr_weights = 0.05;
  double lr_theta = 1e-3;
  double momentum = 0.9;
  double theta_momentum = 0.0;
  bool cosine = true;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  QuantConfig quant;

  /// DomainError for negative strengths or rates, momentum outside [0, 1),
  /// zero epochs or batch size, or an invalid quantization setup.
  void validate() const;
};

/// task + lambda_dz sum theta_dz^2 + lambda_bit sum theta_bit^2 + lambda_w sum ||W||^2.
/// theta_bit terms only enter for layers that carry a theta_bit node.
ad::Var codeq_loss(ad::Var task_loss, std::span<const LayerParams> params, const TrainConfig& cfg);

/// v = momentum v + g; p -= lr v. DomainError if the gradient is missing or
/// its size does not match.
void sgd_update(std::span<double> param, std::span<const double> grad, std::vector<double>& velocity,
                double lr, double momentum);

/// Cosine-annealed weight learning rate for a 0-based epoch.
double cosine_lr(double base, std::size_t epoch, std::size_t epochs);

struct LayerEpochRecord {
  std::string name;
  double sparsity = 0.0;
  int bits = 32;
  std::optional<double> deadzone;
  std::optional<double> scale;
  std::optional<double> theta_dz;
  std::optional<double> theta_bit;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_acc = 0.0;
  double val_acc = 0.0;
  double loss = 0.0;       // mean total loss over the epoch's batches
  double task_loss = 0.0;  // mean cross-entropy
  double overall_sparsity = 0.0;
  double mean_bits = 0.0;
  double lr_weights = 0.0;
  std::vector<LayerEpochRecord> layers;
};

struct History {
  std::vector<EpochRecord> epochs;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

ForwardMode mode_for(const Model& model);

/// Fraction of correctly classified samples.
double evaluate(const Model& model, const Dataset& data, ForwardMode mode, std::size_t batch_size = 256);

/// Trains in place. The model's quant states must already match cfg.quant
/// (see apply_quant_config). Throws DivergenceError on a non-finite loss.
History train(Model& model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
              const EpochCallback& on_epoch = {});

}  // namespace codeq
