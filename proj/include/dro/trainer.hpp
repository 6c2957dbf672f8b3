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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dro/core.hpp"
#include "dro/generator.hpp"
#include "dro/metrics.hpp"
#include "dro/mstep.hpp"
#include "dro/oracle.hpp"
#include "dro/policy.hpp"

namespace dro {

enum class EStepMode { sampled, exact };
enum class StopMetric { f1, em, recall_at_k };

std::string_view to_string(EStepMode mode);
std::string_view to_string(StopMetric metric);
EStepMode parse_estep_mode(std::string_view text);
StopMetric parse_stop_metric(std::string_view text);

struct TrainConfig {
  std::size_t iterations = 5;  // N
  std::size_t m = 8;           // permutations sampled per query
  std::size_t k = 5;           // permutation length
  OptimizerConfig selector_optimizer;
  OptimizerConfig generator_optimizer;
  EStepMode estep_mode = EStepMode::sampled;
  StopMetric early_stop_metric = StopMetric::f1;
  std::size_t patience = 1;
  std::uint64_t seed = 0;
  std::size_t batch_size = 10;
  int workers = 1;
  std::size_t oracle_cap = kDefaultEnumerationCap;
  /// Also compute the exact mean log-likelihood in sampled mode (small pools only).
  bool track_oracle_likelihood = false;
  /// When false, IterationRecord::seconds is 0 so traces are byte-stable.
  bool record_wall_time = true;
};

void validate(const TrainConfig& cfg);

struct IterationRecord {
  std::size_t iteration = 0;
  double train_elbo_estimate = 0.0;
  MetricReport validation;
  double mean_raw_weight = 0.0;
  double weight_variance = 0.0;
  double seconds = 0.0;
  /// Mean exact log p(y | x; theta^t) over the training set after this
  /// iteration's M-step; present in exact mode or when tracking is enabled.
  std::optional<double> oracle_log_marginal;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct Checkpoint {
  SelectorParams selector;
  GeneratorParams generator;
  std::size_t iteration = 0;
  std::string fingerprint;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Identifies the model shape a checkpoint is valid for.
std::string config_fingerprint(std::size_t feature_dim, std::size_t k);

struct TrainResult {
  Checkpoint best;
  Checkpoint final;
  MetricReport initial_metrics;
  std::optional<double> initial_oracle_log_marginal;
  std::vector<IterationRecord> records;
  bool early_stopped = false;
};

/// Alternates E-steps and M-steps. Iterations are numbered from
/// init.iteration + 1 so that resuming from a checkpoint reproduces an
/// uninterrupted run. Without `init`, both models start at zero.
TrainResult run_training(const TrainConfig& cfg, std::span<const Instance> train,
                         std::span<const Instance> validation,
                         std::optional<Checkpoint> init = std::nullopt);

/// Greedy-decode evaluation: EM, F1 and Recall@{1,3,5}. Recall cutoffs past
/// the ranking length are clamped to it. Throws on an empty dataset.
MetricReport evaluate(const SelectorParams& selector,
                      const GeneratorParams& generator,
                      std::span<const Instance> dataset, const SelectionConfig& cfg,
                      int workers = 1);

double metric_value(const MetricReport& report, StopMetric metric);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws FingerprintError when `expected_fingerprint` is given and differs.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::string_view> expected_fingerprint =
                               std::nullopt);

/// Fixed columns: iteration, elbo_estimate, em, f1, recall_1, recall_3,
/// recall_5, mean_raw_weight, weight_variance, seconds.
std::string trace_csv(std::span<const IterationRecord> records);
/// One JSON object per line.
std::string trace_jsonl(std::span<const IterationRecord> records);

std::string format_double(double value);

}  // namespace dro
