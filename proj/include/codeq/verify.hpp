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

// Randomized property suite behind `codeq verify`. Trials run in parallel;
// each trial's instance depends only on (seed, property, trial index), and the
// reported counterexample is the lowest failing trial, shrunk when possible.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace codeq {

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 10000;
};

struct PropertyResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::string counterexample;  // empty when passed

  bool passed() const { return failures == 0; }
};

struct VerifyReport {
  std::vector<PropertyResult> properties;

  bool passed() const;
  bool vacuous() const;  // no trials ran
};

VerifyReport run_verify(const VerifyOptions& opts);

}  // namespace codeq
