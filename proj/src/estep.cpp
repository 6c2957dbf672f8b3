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

#include "dro/estep.hpp"

#include <algorithm>
#include <cmath>

#include "dro/error.hpp"

namespace dro {

Vector normalize_weights(std::span<const double> raw) {
  if (raw.empty()) throw InvariantError("normalize_weights: empty weight list");
  double total = 0.0;
  for (const double w : raw) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw InvariantError("normalize_weights: total weight must be positive and finite");
  }
  Vector out(raw.begin(), raw.end());
  for (auto& w : out) w /= total;
  return out;
}

WeightedSampleSet weigh_permutations(const SelectorParams& selector,
                                     const GeneratorParams& generator,
                                     const Instance& instance,
                                     std::vector<Permutation> perms) {
  if (perms.empty()) throw InvariantError("estimate: m must be at least 1");
  const auto scores = doc_scores(selector, instance);
  const auto gold = instance.gold_index();
  WeightedSampleSet set;
  set.instance_id = instance.id();
  set.samples.reserve(perms.size());
  Vector log_w;
  log_w.reserve(perms.size());
  for (auto& perm : perms) {
    WeightedSample s;
    s.selector_log_prob = perm_log_prob_from_scores(scores, perm);
    s.generator_log_prob = answer_log_prob(generator, instance, perm, gold);
    s.raw_weight = std::exp(s.generator_log_prob);
    s.perm = std::move(perm);
    log_w.push_back(s.generator_log_prob);
    set.samples.push_back(std::move(s));
  }
  // Normalize in log space so tiny likelihoods cannot underflow the total.
  const double peak = *std::max_element(log_w.begin(), log_w.end());
  for (auto& l : log_w) l = std::exp(l - peak);
  const auto norm = normalize_weights(log_w);
  for (std::size_t i = 0; i < norm.size(); ++i) set.samples[i].norm_weight = norm[i];
  return set;
}

WeightedSampleSet estimate(const SelectorParams& selector,
                           const GeneratorParams& generator,
                           const Instance& instance, const SelectionConfig& cfg,
                           std::size_t m, Rng& rng) {
  if (m == 0) throw InvariantError("estimate: m must be at least 1");
  return weigh_permutations(selector, generator, instance,
                            sample_perms(selector, instance, cfg, m, rng));
}

double self_normalized_elbo(const WeightedSampleSet& set) {
  double total = 0.0;
  for (const auto& s : set.samples) {
    total += s.norm_weight * (s.selector_log_prob + s.generator_log_prob);
  }
  return total;
}

}  // namespace dro
