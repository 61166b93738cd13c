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

#include "codeq/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "byte_io.hpp"
#include "codeq/error.hpp"

namespace codeq {

namespace detail {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path);
  return bytes;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace detail

namespace {

constexpr char kMagic[] = "CDQ1";

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Model& model) {
  detail::ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  w.u32(static_cast<std::uint32_t>(model.spec.input_shape.size()));
  for (std::size_t d : model.spec.input_shape) w.u64(d);
  w.u64(model.spec.num_classes);
  for (const auto& layer : model.layers) {
    const LayerSpec& s = layer.spec;
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.str(s.name);
    for (std::size_t v : {s.in_features, s.out_features, s.in_channels, s.out_channels, s.kernel_h,
                          s.kernel_w, s.stride, s.padding, s.in_h, s.in_w, s.out_h, s.out_w}) {
      w.u64(v);
    }
    w.u8(s.has_bias);
    w.u8(s.relu);
    w.u64(s.pool);
    w.f64s(layer.weight.values());
    w.f64s(layer.bias.values());
    w.u8(layer.quant.has_value());
    if (layer.quant) {
      const LayerQuantState& q = *layer.quant;
      w.f64(q.theta_dz);
      w.u8(q.theta_bit.has_value());
      if (q.theta_bit) w.f64(*q.theta_bit);
      w.u8(q.fixed_bits.has_value());
      if (q.fixed_bits) w.i32(*q.fixed_bits);
      w.i32(q.b_min);
      w.i32(q.b_max);
      w.f64(q.quantile);
      w.f64(q.epsilon);
      w.u8(q.detach_scale_from_d);
    }
    w.u8(layer.stored_bits.has_value());
    if (layer.stored_bits) w.i32(*layer.stored_bits);
  }
  return std::move(w.bytes());
}

Model parse_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  if (bytes.size() < 4) throw IoError("checkpoint: truncated header");
  const auto magic = r.take(4);
  if (std::string(magic.begin(), magic.end()) != kMagic) {
    std::ostringstream os;
    os << "checkpoint: bad magic 0x" << std::hex;
    for (std::uint8_t b : magic) {
      os << (b < 16 ? "0" : "") << static_cast<int>(b);
    }
    os << " (expected \"CDQ1\")";
    throw FormatError(os.str());
  }
  Model m;
  const std::uint32_t count = r.u32();
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw FormatError("checkpoint: implausible input rank " + std::to_string(rank));
  for (std::uint32_t i = 0; i < rank; ++i) m.spec.input_shape.push_back(r.u64());
  m.spec.num_classes = r.u64();
  for (std::uint32_t i = 0; i < count; ++i) {
    Layer layer;
    LayerSpec& s = layer.spec;
    const std::uint8_t kind = r.u8();
    if (kind > 1) throw FormatError("checkpoint: unknown layer kind " + std::to_string(kind));
    s.kind = static_cast<LayerKind>(kind);
    s.name = r.str();
    for (std::size_t* v : {&s.in_features, &s.out_features, &s.in_channels, &s.out_channels,
                           &s.kernel_h, &s.kernel_w, &s.stride, &s.padding, &s.in_h, &s.in_w,
                           &s.out_h, &s.out_w}) {
      *v = r.u64();
    }
    s.has_bias = r.u8() != 0;
    s.relu = r.u8() != 0;
    s.pool = r.u64();
    try {
      s.validate();
    } catch (const ShapeError& e) {
      throw FormatError(std::string("checkpoint: ") + e.what());
    }
    auto weights = r.f64s();
    if (weights.size() != s.weight_count()) {
      throw FormatError("checkpoint: layer '" + s.name + "' stores " + std::to_string(weights.size()) +
                        " weights, spec needs " + std::to_string(s.weight_count()));
    }
    layer.weight = Tensor(s.weight_shape(), std::move(weights));
    auto bias = r.f64s();
    if (bias.size() != s.bias_count()) {
      throw FormatError("checkpoint: layer '" + s.name + "' bias size mismatch");
    }
    const std::size_t bias_n = bias.size();
    layer.bias = Tensor({bias_n}, std::move(bias));
    if (r.u8()) {
      LayerQuantState q;
      q.theta_dz = r.f64();
      if (r.u8()) q.theta_bit = r.f64();
      if (r.u8()) q.fixed_bits = r.i32();
      q.b_min = r.i32();
      q.b_max = r.i32();
      q.quantile = r.f64();
      q.epsilon = r.f64();
      q.detach_scale_from_d = r.u8() != 0;
      try {
        q.validate();
      } catch (const DomainError& e) {
        throw FormatError("checkpoint: layer '" + s.name + "': " + e.what());
      }
      layer.quant = q;
    }
    if (r.u8()) layer.stored_bits = r.i32();
    m.layers.push_back(std::move(layer));
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes");
  for (const auto& l : m.layers) m.spec.layers.push_back(l.spec);
  if (!m.layers.empty()) {
    try {
      m.spec.validate();
    } catch (const ShapeError& e) {
      throw FormatError(std::string("checkpoint: ") + e.what());
    }
  }
  return m;
}

void save_checkpoint(const std::string& path, const Model& model) {
  detail::write_file(path, serialize_checkpoint(model));
}

Model load_checkpoint(const std::string& path) { return parse_checkpoint(detail::read_file(path)); }

}  // namespace codeq
