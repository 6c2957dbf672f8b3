// Copyright 2026 The DRO-Desk Authors
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

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dro/core.hpp"
#include "dro/synthenv.hpp"
#include "dro/trainer.hpp"

namespace dro {

/// Settings for the oracle validation suite.
struct OracleSuiteConfig {
  std::size_t instances = 20;
  std::size_t n = 5;
  std::size_t k = 2;
  std::size_t mc_samples = 20'000;
  std::size_t random_q = 100;
  std::size_t em_instances = 20;
  std::size_t em_n = 4;
  std::size_t em_k = 2;
  std::size_t em_iterations = 5;
  std::size_t em_inner_steps = 200;
  double em_learning_rate = 0.05;
  /// Test hook: "none" or "normalization" (corrupts normalized weights).
  std::string fault = "none";
};

struct PathConfig {
  std::filesystem::path out_dir = "run";
  std::filesystem::path train;        // default: <out_dir>/train.jsonl
  std::filesystem::path validation;   // default: <out_dir>/validation.jsonl
  std::filesystem::path checkpoint;   // eval input; default: <out_dir>/best.ckpt.json
  std::filesystem::path dataset;      // eval input; default: validation
  std::filesystem::path init_checkpoint;  // optional training start point
  std::filesystem::path report;           // eval output; default: <out_dir>/eval_report.json
};

/// Every setting of a run. Loaded from one JSON file whose nested objects map
/// to dotted keys ("train.selector.learning_rate"); unknown keys are errors.
struct RunConfig {
  TaskSpec task;
  double validation_fraction = 0.2;
  FeatureSpec features;
  TrainConfig train;
  std::optional<Vector> selector_init;   // default: initial_selector()
  std::optional<Vector> generator_init;  // default: initial_generator()
  OracleSuiteConfig oracle;
  PathConfig paths;

  std::filesystem::path train_path() const;
  std::filesystem::path validation_path() const;
  std::filesystem::path checkpoint_path() const;
  std::filesystem::path dataset_path() const;
  std::filesystem::path report_path() const;
};

struct ConfigKey {
  std::string name;
  std::string doc;
};

/// All recognized keys with one-line documentation.
const std::vector<ConfigKey>& config_keys();

RunConfig default_run_config();
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies "key=value"; the value is read as JSON, falling back to a string.
void apply_override(RunConfig& cfg, std::string_view assignment);
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view json_value);

/// Nested JSON rendering; parse_run_config(to_json_text(c)) reproduces c.
std::string to_json_text(const RunConfig& cfg);

/// Checks cross-field invariants (task spec, train config, split fraction).
void validate(const RunConfig& cfg);

}  // namespace dro
