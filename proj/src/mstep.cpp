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

#include "dro/mstep.hpp"

#include <cmath>

#include "dro/error.hpp"

namespace dro {

namespace {

void check_batch(std::span<const Instance> instances,
                 std::span<const WeightedSampleSet> sets) {
  if (instances.empty()) throw InvariantError("loss: empty batch");
  if (instances.size() != sets.size()) {
    throw InvariantError("loss: " + std::to_string(instances.size()) +
                         " instances but " + std::to_string(sets.size()) +
                         " sample sets");
  }
  for (std::size_t b = 0; b < instances.size(); ++b) {
    if (instances[b].id() != sets[b].instance_id) {
      throw InvariantError("loss: sample set '" + sets[b].instance_id +
                           "' paired with instance '" + instances[b].id() + "'");
    }
  }
}

void check_finite(const GradReport& report, const char* what) {
  bool ok = std::isfinite(report.loss);
  for (const double g : report.grad) ok = ok && std::isfinite(g);
  if (!ok) throw DivergenceError(std::string(what) + ": non-finite loss or gradient");
}

}  // namespace

void validate(const OptimizerConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw InvariantError("learning_rate must be positive");
  if (!(cfg.weight_decay >= 0.0)) throw InvariantError("weight_decay must be non-negative");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw InvariantError("momentum must lie in [0, 1)");
  }
  if (cfg.inner_steps == 0) throw InvariantError("inner_steps must be positive");
}

GradReport selection_loss_grad(std::span<const Instance> instances,
                               std::span<const WeightedSampleSet> sets,
                               const SelectorParams& selector) {
  check_batch(instances, sets);
  const double scale = 1.0 / static_cast<double>(instances.size());
  GradReport report{0.0, Vector(selector.weights.size(), 0.0)};
  for (std::size_t b = 0; b < instances.size(); ++b) {
    for (const auto& s : sets[b].samples) {
      const double w = s.norm_weight * scale;
      report.loss -= w * perm_log_prob(selector, instances[b], s.perm);
      const auto g = perm_log_prob_grad(selector, instances[b], s.perm);
      for (std::size_t d = 0; d < g.size(); ++d) report.grad[d] -= w * g[d];
    }
  }
  check_finite(report, "selection loss");
  return report;
}

GradReport generation_loss_grad(std::span<const Instance> instances,
                                std::span<const WeightedSampleSet> sets,
                                const GeneratorParams& generator) {
  check_batch(instances, sets);
  const double scale = 1.0 / static_cast<double>(instances.size());
  GradReport report{0.0, Vector(generator.weights.size(), 0.0)};
  for (std::size_t b = 0; b < instances.size(); ++b) {
    const auto gold = instances[b].gold_index();
    for (const auto& s : sets[b].samples) {
      const double w = s.norm_weight * scale;
      report.loss -= w * answer_log_prob(generator, instances[b], s.perm, gold);
      const auto g = answer_log_prob_grad(generator, instances[b], s.perm, gold);
      for (std::size_t d = 0; d < g.size(); ++d) report.grad[d] -= w * g[d];
    }
  }
  check_finite(report, "generation loss");
  return report;
}

double weighted_log_joint(std::span<const Instance> instances,
                          std::span<const WeightedSampleSet> sets,
                          const SelectorParams& selector,
                          const GeneratorParams& generator) {
  check_batch(instances, sets);
  const double scale = 1.0 / static_cast<double>(instances.size());
  double total = 0.0;
  for (std::size_t b = 0; b < instances.size(); ++b) {
    const auto gold = instances[b].gold_index();
    for (const auto& s : sets[b].samples) {
      const double joint = perm_log_prob(selector, instances[b], s.perm) +
                           answer_log_prob(generator, instances[b], s.perm, gold);
      total += s.norm_weight * scale * joint;
    }
  }
  return total;
}

void apply_update(Vector& params, std::span<const double> grad,
                  const OptimizerConfig& cfg, Vector& velocity) {
  if (grad.size() != params.size()) {
    throw InvariantError("apply_update: gradient dimension " +
                         std::to_string(grad.size()) + " != parameter dimension " +
                         std::to_string(params.size()));
  }
  for (std::size_t d = 0; d < grad.size(); ++d) {
    if (!std::isfinite(grad[d])) {
      throw DivergenceError("apply_update: non-finite gradient at coordinate " +
                            std::to_string(d));
    }
  }
  if (velocity.empty()) velocity.assign(params.size(), 0.0);
  if (velocity.size() != params.size()) {
    throw InvariantError("apply_update: momentum buffer dimension mismatch");
  }
  for (std::size_t d = 0; d < params.size(); ++d) {
    velocity[d] = cfg.momentum * velocity[d] + grad[d];
    params[d] -= cfg.learning_rate * (velocity[d] + cfg.weight_decay * params[d]);
  }
}

}  // namespace dro
