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

// Model checkpoint container, all fields little-endian:
//
//   "CDQ1" u32 layer_count u32 input_rank u64 input_dims[rank] u64 num_classes
//   per layer:
//     u8 kind, str name, u64 geometry[12], u8 has_bias, u8 relu, u64 pool
//     f64 array weights, f64 array bias          (array = u64 count + values)
//     u8 has_quant [f64 theta_dz, u8 has_theta_bit [f64], u8 has_fixed [i32],
//                   i32 b_min, i32 b_max, f64 quantile, f64 epsilon, u8 detach]
//     u8 has_stored_bits [i32]
//
// Strings are u32 length + bytes. Round trips are bit-exact.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "codeq/models.hpp"

namespace codeq {

std::vector<std::uint8_t> serialize_checkpoint(const Model& model);
/// FormatError on bad magic or inconsistent shapes, IoError on truncation.
Model parse_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace codeq
