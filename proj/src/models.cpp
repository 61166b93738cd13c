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

#include "codeq/models.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "codeq/error.hpp"

namespace codeq {

LayerSpec LayerSpec::linear(std::string name, std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::linear;
  s.name = std::move(name);
  s.in_features = in;
  s.out_features = out;
  return s;
}

LayerSpec LayerSpec::conv(std::string name, std::size_t in_channels, std::size_t out_channels,
                          std::size_t kernel, std::size_t in_h, std::size_t in_w,
                          std::size_t stride, std::size_t padding) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.name = std::move(name);
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.kernel_h = s.kernel_w = kernel;
  s.stride = stride;
  s.padding = padding;
  s.in_h = in_h;
  s.in_w = in_w;
  if (stride == 0 || in_h + 2 * padding < kernel || in_w + 2 * padding < kernel) {
    throw ShapeError("conv layer '" + s.name + "': kernel does not fit the input");
  }
  s.out_h = (in_h + 2 * padding - kernel) / stride + 1;
  s.out_w = (in_w + 2 * padding - kernel) / stride + 1;
  return s;
}

Shape LayerSpec::weight_shape() const {
  if (kind == LayerKind::linear) return {out_features, in_features};
  return {out_channels, in_channels, kernel_h, kernel_w};
}

std::size_t LayerSpec::weight_count() const { return numel(weight_shape()); }

std::size_t LayerSpec::bias_count() const {
  if (!has_bias) return 0;
  return kind == LayerKind::linear ? out_features : out_channels;
}

Shape LayerSpec::output_shape() const {
  if (kind == LayerKind::linear) return {out_features};
  std::size_t h = out_h, w = out_w;
  if (pool > 0) {
    h /= pool;
    w /= pool;
  }
  return {out_channels, h, w};
}

void LayerSpec::validate() const {
  if (kind == LayerKind::linear) {
    if (in_features == 0 || out_features == 0) {
      throw ShapeError("linear layer '" + name + "' has a zero dimension");
    }
    if (pool != 0) throw ShapeError("linear layer '" + name + "' cannot pool");
    return;
  }
  if (in_channels == 0 || out_channels == 0 || kernel_h == 0 || kernel_w == 0 || stride == 0) {
    throw ShapeError("conv layer '" + name + "' has a zero dimension");
  }
  if (in_h + 2 * padding < kernel_h || in_w + 2 * padding < kernel_w) {
    throw ShapeError("conv layer '" + name + "': kernel does not fit the input");
  }
  const std::size_t oh = (in_h + 2 * padding - kernel_h) / stride + 1;
  const std::size_t ow = (in_w + 2 * padding - kernel_w) / stride + 1;
  if (oh != out_h || ow != out_w) {
    throw ShapeError("conv layer '" + name + "': output " + std::to_string(out_h) + "x" +
                     std::to_string(out_w) + " inconsistent with geometry (" + std::to_string(oh) +
                     "x" + std::to_string(ow) + ")");
  }
  if (pool > 0 && (out_h < pool || out_w < pool)) {
    throw ShapeError("conv layer '" + name + "': pool window larger than output");
  }
}

void ModelSpec::validate() const {
  if (input_shape.empty() || numel(input_shape) == 0) throw ShapeError("model input shape is empty");
  if (layers.empty()) throw ShapeError("model has no layers");
  Shape current = input_shape;
  for (const auto& layer : layers) {
    layer.validate();
    if (layer.kind == LayerKind::linear) {
      if (numel(current) != layer.in_features) {
        throw ShapeError("layer '" + layer.name + "' expects " + std::to_string(layer.in_features) +
                         " inputs, previous output is " + to_string(current));
      }
    } else {
      const Shape want = {layer.in_channels, layer.in_h, layer.in_w};
      if (current != want) {
        throw ShapeError("layer '" + layer.name + "' expects input " + to_string(want) + ", got " +
                         to_string(current));
      }
    }
    current = layer.output_shape();
  }
  if (numel(current) != num_classes) {
    throw ShapeError("final layer produces " + to_string(current) + " but num_classes is " +
                     std::to_string(num_classes));
  }
}

std::size_t Model::weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.spec.weight_count();
  return n;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.spec.weight_count() + l.spec.bias_count();
  return n;
}

std::string Model::summary() const {
  std::ostringstream os;
  os << "input " << to_string(spec.input_shape) << "\n";
  for (const auto& l : layers) {
    os << "  " << l.spec.name << " "
       << (l.spec.kind == LayerKind::linear ? "linear " : "conv2d ") << to_string(l.spec.weight_shape())
       << " -> " << to_string(l.spec.output_shape()) << "  params " << l.spec.weight_count() << " + "
       << l.spec.bias_count() << "\n";
  }
  os << "weights " << weight_count() << ", parameters " << parameter_count() << "\n";
  return os.str();
}

namespace {

Model materialize(ModelSpec spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  Model m;
  for (const auto& ls : spec.layers) {
    Layer layer;
    layer.spec = ls;
    const Shape ws = ls.weight_shape();
    const std::size_t fan_in = numel(ws) / ws[0];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    layer.weight = Tensor(ws);
    for (double& v : layer.weight.values()) v = dist(rng);
    layer.bias = Tensor({ls.bias_count()}, 0.0);
    m.layers.push_back(std::move(layer));
  }
  m.spec = std::move(spec);
  return m;
}

}  // namespace

Model build_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                std::size_t num_classes, std::uint64_t seed) {
  if (input_dim == 0 || num_classes == 0) throw ShapeError("MLP dimensions must be positive");
  ModelSpec spec;
  spec.input_shape = {input_dim};
  spec.num_classes = num_classes;
  std::size_t prev = input_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (hidden[i] == 0) throw ShapeError("MLP hidden width must be positive");
    LayerSpec l = LayerSpec::linear("fc" + std::to_string(i + 1), prev, hidden[i]);
    l.relu = true;
    spec.layers.push_back(l);
    prev = hidden[i];
  }
  spec.layers.push_back(LayerSpec::linear("fc" + std::to_string(hidden.size() + 1), prev, num_classes));
  return materialize(std::move(spec), seed);
}

Model build_mini_cnn(const Shape& input, std::size_t num_classes, std::uint64_t seed) {
  if (input.size() != 3 || numel(input) == 0 || num_classes == 0) {
    throw ShapeError("mini CNN input must be C x H x W, got " + to_string(input));
  }
  ModelSpec spec;
  spec.input_shape = input;
  spec.num_classes = num_classes;
  LayerSpec c1 = LayerSpec::conv("conv1", input[0], 16, 3, input[1], input[2]);
  c1.relu = true;
  c1.pool = 2;
  const Shape s1 = c1.output_shape();
  LayerSpec c2 = LayerSpec::conv("conv2", 16, 32, 3, s1[1], s1[2]);
  c2.relu = true;
  c2.pool = 2;
  const Shape s2 = c2.output_shape();
  if (s2[1] == 0 || s2[2] == 0) throw ShapeError("mini CNN input too small: " + to_string(input));
  spec.layers = {c1, c2, LayerSpec::linear("fc", numel(s2), num_classes)};
  return materialize(std::move(spec), seed);
}

void apply_quant_config(Model& model, const QuantConfig& cfg) {
  for (auto& layer : model.layers) {
    layer.stored_bits.reset();
    if (cfg.precision == Precision::full) {
      layer.quant.reset();
      continue;
    }
    LayerQuantState st = cfg.precision == Precision::mixed
                             ? LayerQuantState::mixed(cfg.init_theta, cfg.init_theta, cfg.b_min, cfg.b_max)
                             : LayerQuantState::fixed(cfg.bits, cfg.init_theta);
    st.b_min = cfg.b_min;
    st.b_max = cfg.b_max;
    st.quantile = cfg.quantile;
    st.epsilon = cfg.epsilon;
    st.detach_scale_from_d = cfg.detach_scale_from_d;
    st.validate();
    layer.quant = st;
  }
}

ForwardResult forward(ad::Tape& tape, const Model& model, const Tensor& batch, ForwardMode mode,
                      bool track_grad) {
  const std::size_t per_sample = numel(model.spec.input_shape);
  if (batch.shape().empty() || batch.shape()[0] == 0 || batch.size() != batch.shape()[0] * per_sample) {
    throw ShapeError("batch " + to_string(batch.shape()) + " does not match input " +
                     to_string(model.spec.input_shape));
  }
  const std::size_t n = batch.shape()[0];
  Shape in_shape = {n};
  in_shape.insert(in_shape.end(), model.spec.input_shape.begin(), model.spec.input_shape.end());

  ForwardResult out;
  ad::Var x = tape.constant(batch.reshaped(in_shape));
  for (const auto& layer : model.layers) {
    LayerParams p;
    p.weight = tape.leaf(layer.weight, track_grad);
    if (layer.spec.has_bias) p.bias = tape.leaf(layer.bias, track_grad);
    ad::Var w = p.weight;
    std::optional<QuantOutcome> q;
    if (mode == ForwardMode::codeq) {
      if (!layer.quant) {
        throw DomainError("layer '" + layer.spec.name + "' has no quantization state");
      }
      p.theta_dz = tape.scalar(layer.quant->theta_dz, track_grad);
      if (layer.quant->theta_bit) p.theta_bit = tape.scalar(*layer.quant->theta_bit, track_grad);
      q = quantize_layer(p.weight, p.theta_dz, p.theta_bit, *layer.quant);
      w = q->w_hat;
    }
    if (layer.spec.kind == LayerKind::linear) {
      if (x.shape().size() != 2) x = ad::reshape(x, {n, x.size() / n});
      x = ad::matmul_nt(x, w);
      if (layer.spec.has_bias) x = ad::add_row_bias(x, p.bias);
    } else {
      x = ad::conv2d(x, w, layer.spec.stride, layer.spec.padding);
      if (layer.spec.has_bias) x = ad::add_channel_bias(x, p.bias);
    }
    if (layer.spec.relu) x = ad::relu(x);
    if (layer.spec.pool > 0) x = ad::maxpool2d(x, layer.spec.pool);
    out.params.push_back(p);
    out.quant.push_back(std::move(q));
  }
  if (x.shape().size() != 2) x = ad::reshape(x, {n, x.size() / n});
  out.logits = x;
  return out;
}

}  // namespace codeq
