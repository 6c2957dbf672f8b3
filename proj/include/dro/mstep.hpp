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

#include "dro/core.hpp"
#include "dro/estep.hpp"
#include "dro/generator.hpp"
#include "dro/policy.hpp"

namespace dro {

struct OptimizerConfig {
  double learning_rate = 0.05;
  double weight_decay = 0.01;
  double momentum = 0.0;
  std::size_t inner_steps = 1;
};

void validate(const OptimizerConfig& cfg);

struct GradReport {
  double loss = 0.0;
  Vector grad;
};

/// L_S = -(1/|B|) sum_x sum_i w_i log p(z_i | x; theta_s), with the stored
/// normalized weights held constant. `sets[b]` must belong to `instances[b]`.
GradReport selection_loss_grad(std::span<const Instance> instances,
                               std::span<const WeightedSampleSet> sets,
                               const SelectorParams& selector);

/// L_G = -(1/|B|) sum_x sum_i w_i log p(y | x, d_{z_i}; theta_g).
GradReport generation_loss_grad(std::span<const Instance> instances,
                                std::span<const WeightedSampleSet> sets,
                                const GeneratorParams& generator);

/// (1/|B|) sum_x sum_i w_i log p(y, z_i | x; theta) under the given params.
/// Equals -(L_S + L_G).
double weighted_log_joint(std::span<const Instance> instances,
                          std::span<const WeightedSampleSet> sets,
                          const SelectorParams& selector,
                          const GeneratorParams& generator);

/// SGD with momentum and decoupled weight decay:
///   v <- momentum * v + grad;  params <- params - lr * (v + weight_decay * params)
/// An empty `velocity` is initialized to zeros. Throws DivergenceError on a
/// non-finite gradient.
void apply_update(Vector& params, std::span<const double> grad,
                  const OptimizerConfig& cfg, Vector& velocity);

}  // namespace dro
