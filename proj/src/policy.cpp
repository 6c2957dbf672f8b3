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

#include "dro/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dro/error.hpp"

namespace dro {

namespace {

double logsumexp_remaining(std::span<const double> scores,
                           const std::vector<bool>& taken) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!taken[j]) peak = std::max(peak, scores[j]);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!taken[j]) sum += std::exp(scores[j] - peak);
  }
  return peak + std::log(sum);
}

void require_k(std::size_t k, std::size_t n) {
  if (k == 0) throw InvariantError("selection length K must be positive");
  if (k > n) {
    throw InvariantError("selection length K=" + std::to_string(k) +
                         " exceeds pool size n=" + std::to_string(n));
  }
}

}  // namespace

Vector doc_scores(const SelectorParams& params, const Instance& instance) {
  if (!instance.has_features()) {
    throw InvariantError("instance '" + instance.id() + "' has no features");
  }
  Vector scores;
  scores.reserve(instance.pool_size());
  for (const auto& c : instance.candidates()) {
    if (c.features->size() != params.weights.size()) {
      throw InvariantError("instance '" + instance.id() +
                           "': feature dimension " +
                           std::to_string(c.features->size()) +
                           " does not match selector dimension " +
                           std::to_string(params.weights.size()));
    }
    scores.push_back(dot(params.weights, *c.features));
  }
  return scores;
}

double perm_log_prob_from_scores(std::span<const double> scores,
                                 const Permutation& perm) {
  validate_permutation(perm, scores.size());
  std::vector<bool> taken(scores.size(), false);
  double total = 0.0;
  for (const auto j : perm.docids) {
    total += scores[j] - logsumexp_remaining(scores, taken);
    taken[j] = true;
  }
  return std::min(total, 0.0);
}

double perm_log_prob(const SelectorParams& params, const Instance& instance,
                     const Permutation& perm) {
  return perm_log_prob_from_scores(doc_scores(params, instance), perm);
}

Vector perm_log_prob_grad(const SelectorParams& params, const Instance& instance,
                          const Permutation& perm) {
  const auto scores = doc_scores(params, instance);
  validate_permutation(perm, scores.size());
  const auto& pool = instance.candidates();
  Vector grad(params.weights.size(), 0.0);
  std::vector<bool> taken(scores.size(), false);
  for (const auto chosen : perm.docids) {
    const double lse = logsumexp_remaining(scores, taken);
    const auto& phi = *pool[chosen].features;
    for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += phi[d];
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (taken[j]) continue;
      const double p = std::exp(scores[j] - lse);
      const auto& phi_j = *pool[j].features;
      for (std::size_t d = 0; d < grad.size(); ++d) grad[d] -= p * phi_j[d];
    }
    taken[chosen] = true;
  }
  return grad;
}

std::vector<Permutation> sample_perms(const SelectorParams& params,
                                      const Instance& instance,
                                      const SelectionConfig& cfg, std::size_t m,
                                      Rng& rng) {
  const auto scores = doc_scores(params, instance);
  const std::size_t n = scores.size();
  require_k(cfg.k, n);
  std::vector<Permutation> out;
  out.reserve(m);
  Vector mass(n);
  for (std::size_t draw = 0; draw < m; ++draw) {
    std::vector<bool> taken(n, false);
    Permutation perm;
    perm.docids.reserve(cfg.k);
    for (std::size_t t = 0; t < cfg.k; ++t) {
      // Rescale by the best remaining score so the leader's mass is exactly 1.
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (!taken[j]) peak = std::max(peak, scores[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        mass[j] = taken[j] ? 0.0 : std::exp(scores[j] - peak);
        total += mass[j];
      }
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      std::size_t pick = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (taken[j]) continue;
        acc += mass[j];
        pick = j;
        if (target < acc) break;
      }
      perm.docids.push_back(pick);
      taken[pick] = true;
    }
    out.push_back(std::move(perm));
  }
  return out;
}

Permutation greedy_perm(const SelectorParams& params, const Instance& instance,
                        std::size_t length) {
  const auto scores = doc_scores(params, instance);
  require_k(length, scores.size());
  std::vector<std::size_t> order(scores.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  order.resize(length);
  return Permutation{std::move(order)};
}

}  // namespace dro
