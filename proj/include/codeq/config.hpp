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

// Experiment configuration files:
//
//   # comment            ; also a comment
//   [section]
//   key = value
//
// Values are typed by lexical form: true/false are booleans, an optional sign
// plus digits is an integer, anything from_chars accepts as a double is a
// real, everything else (optionally in double quotes) is a string.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "codeq/models.hpp"
#include "codeq/trainer.hpp"

namespace codeq {

using ConfigValue = std::variant<bool, std::int64_t, double, std::string>;

ConfigValue parse_config_value(const std::string& text);
std::string config_value_text(const ConfigValue& v);

struct ConfigEntry {
  ConfigValue value;
  int line = 0;  // 0 for command-line overrides
};

/// Flat "section.key" -> entry map.
struct ConfigFile {
  std::map<std::string, ConfigEntry> entries;

  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);
  /// "section.key=value"; replaces or adds the entry.
  void apply_override(const std::string& assignment);
  /// Sectioned file text; parse(text()) reproduces the entries.
  std::string text() const;
};

struct DataSource {
  std::string kind = "mnist";  // mnist | csv | blobs
  std::string path = "data/mnist";
  std::size_t train_limit = 0;  // 0 keeps all
  std::size_t val_count = 0;    // held out from the training file (csv, blobs)
  std::size_t blobs_n = 2000;
  std::size_t blobs_dims = 784;
  std::size_t blobs_classes = 10;
  double blobs_spread = 1.0;
};

struct ModelRecipe {
  std::string kind = "mlp";  // mlp | mini_cnn
  std::vector<std::size_t> hidden = {256};
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string output_dir = "runs/experiment";
  DataSource data;
  ModelRecipe model;
  TrainConfig train;

  /// ConfigError (with the line) on unknown keys, wrong types, bad enum
  /// values, or missing required keys (data.source, model.recipe, train.epochs).
  static ExperimentConfig from(const ConfigFile& file);
  /// Every key with its resolved value; parsing the result gives back an
  /// equal configuration.
  ConfigFile resolved() const;
};

}  // namespace codeq
