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

// Command implementations behind the `codeq` executable. Every command writes
// manifest.json into its output directory; output is written to the given
// streams so the commands can be driven in-process.
//
// Exit codes: 0 success, 1 property failure, 2 input error, 3 divergence.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "codeq/config.hpp"
#include "codeq/metrics.hpp"
#include "codeq/trainer.hpp"

namespace codeq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPropertyFailure = 1;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitDivergence = 3;

struct TrainOptions {
  std::string config_path;  // .ini file or a manifest.json from an earlier run
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // section.key=value, applied in order
  bool quiet = false;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 10000;
  std::string out_dir = "runs/verify";
};

struct BopsOptions {
  std::string checkpoint;
  std::optional<std::string> out_dir;  // default: <checkpoint>.bops/
};

struct QuantizeOptions {
  std::string checkpoint;
  std::optional<std::string> out_dir;  // default: <checkpoint>.quantized/
  std::optional<double> theta_dz;
  std::optional<double> deadzone;      // absolute width d
  bool fixed_point = false;            // d = s, solved from d = s~(d) with eps = 0
  std::optional<int> bits;
  std::optional<double> quantile;      // default: layer state, else 1.0
};

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bops(const BopsOptions& opts, std::ostream& out, std::ostream& err);
int cmd_quantize(const QuantizeOptions& opts, std::ostream& out, std::ostream& err);

/// Parses argv (subcommands train, verify, bops, quantize) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Pieces exposed for tests.

/// Loads an .ini file, or the embedded config of a manifest.json.
ConfigFile load_experiment_file(const std::string& path);
std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& cfg);
Model build_model(const ExperimentConfig& cfg, const Dataset& train_set);

std::string history_csv(const History& h);
/// One row per epoch per layer.
std::string layers_csv(const History& h);
std::string report_json(const CompressionReport& r);
std::string report_csv(const CompressionReport& r);
std::string sha256_hex(const std::string& path);

}  // namespace codeq::cli
