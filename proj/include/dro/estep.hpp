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
#include <span>
#include <string>
#include <vector>

#include "dro/core.hpp"
#include "dro/generator.hpp"
#include "dro/policy.hpp"
#include "dro/random.hpp"

namespace dro {

struct WeightedSample {
  Permutation perm;
  double selector_log_prob = 0.0;
  double generator_log_prob = 0.0;
  /// p(y | x, d_z; theta_g), in (0, 1].
  double raw_weight = 0.0;
  /// raw_weight self-normalized over the instance's sample set.
  double norm_weight = 0.0;

  friend bool operator==(const WeightedSample&, const WeightedSample&) = default;
};

struct WeightedSampleSet {
  std::string instance_id;
  std::vector<WeightedSample> samples;

  std::size_t m() const { return samples.size(); }
  friend bool operator==(const WeightedSampleSet&, const WeightedSampleSet&) = default;
};

/// w_i / sum_j w_j. Throws on an empty list or a non-positive total.
Vector normalize_weights(std::span<const double> raw);

/// Draws m permutations from the selector and weights each by the generator
/// likelihood of the gold answer.
WeightedSampleSet estimate(const SelectorParams& selector,
                           const GeneratorParams& generator,
                           const Instance& instance, const SelectionConfig& cfg,
                           std::size_t m, Rng& rng);

/// Builds a sample set from explicit permutations (shared by estimate() and
/// the exact-posterior E-step).
WeightedSampleSet weigh_permutations(const SelectorParams& selector,
                                     const GeneratorParams& generator,
                                     const Instance& instance,
                                     std::vector<Permutation> perms);

/// Self-normalized estimate of E_posterior[log p(y, z | x)]:
/// sum_i norm_weight_i * (selector_log_prob_i + generator_log_prob_i).
double self_normalized_elbo(const WeightedSampleSet& set);

}  // namespace dro
