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

#include "dro/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "dro/error.hpp"
#include "dro/text.hpp"

namespace dro {

namespace {

bool shares_token(const std::vector<std::string>& doc,
                  const std::unordered_set<std::string>& frontier) {
  return std::any_of(doc.begin(), doc.end(), [&](const std::string& t) {
    return frontier.contains(t);
  });
}

/// Link depth of each selected position: 1 for documents sharing a token
/// with the query, d + 1 for documents sharing a token with a depth-d
/// document, 0 for documents not reachable through the selection.
std::vector<std::size_t> link_depths(const Instance& instance,
                                     const Permutation& perm) {
  const auto& q = instance.query_tokens();
  std::unordered_set<std::string> frontier(q.begin(), q.end());
  std::vector<std::size_t> depth(perm.size(), 0);
  for (std::size_t level = 1; !frontier.empty(); ++level) {
    std::unordered_set<std::string> next;
    for (std::size_t t = 0; t < perm.size(); ++t) {
      if (depth[t] != 0) continue;
      const auto& doc = instance.doc_tokens(perm.docids[t]);
      if (!shares_token(doc, frontier)) continue;
      depth[t] = level;
      next.insert(doc.begin(), doc.end());
    }
    frontier = std::move(next);
  }
  return depth;
}

Vector features_with_links(const Instance& instance, const Permutation& perm,
                           std::size_t answer_index,
                           const std::vector<std::size_t>& depth) {
  const auto& answer = instance.answer_tokens(answer_index);
  Vector psi(kAnswerFeatureDim, 0.0);
  for (std::size_t t = 0; t < perm.size(); ++t) {
    if (!contains_subsequence(instance.doc_tokens(perm.docids[t]), answer)) {
      continue;
    }
    psi[kContainCount] += 1.0;
    psi[kRankDiscounted] += 1.0 / std::log2(static_cast<double>(t) + 2.0);
    psi[kChainDepth] = std::max(psi[kChainDepth], static_cast<double>(depth[t]));
  }
  if (!answer.empty()) {
    const auto& q = instance.query_tokens();
    const std::unordered_set<std::string> query_set(q.begin(), q.end());
    const auto hits = std::count_if(answer.begin(), answer.end(), [&](const auto& t) {
      return query_set.contains(t);
    });
    psi[kQueryOverlap] =
        static_cast<double>(hits) / static_cast<double>(answer.size());
  }
  psi[kBias] = 1.0;
  return psi;
}

std::vector<Vector> all_answer_features(const Instance& instance,
                                        const Permutation& perm) {
  validate_permutation(perm, instance.pool_size());
  const auto depth = link_depths(instance, perm);
  std::vector<Vector> out;
  out.reserve(instance.answer_candidates().size());
  for (std::size_t a = 0; a < instance.answer_candidates().size(); ++a) {
    out.push_back(features_with_links(instance, perm, a, depth));
  }
  return out;
}

void require_dim(const GeneratorParams& params) {
  if (params.weights.size() != kAnswerFeatureDim) {
    throw InvariantError("generator dimension " +
                         std::to_string(params.weights.size()) + " != " +
                         std::to_string(kAnswerFeatureDim));
  }
}

/// Returns log-probabilities over the full answer set plus the features.
Vector answer_log_softmax(const GeneratorParams& params, const Instance& instance,
                          const Permutation& perm, std::vector<Vector>* psi_out) {
  require_dim(params);
  auto psi = all_answer_features(instance, perm);
  Vector logits(psi.size());
  for (std::size_t a = 0; a < psi.size(); ++a) logits[a] = dot(params.weights, psi[a]);
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (const double l : logits) sum += std::exp(l - peak);
  const double lse = peak + std::log(sum);
  for (auto& l : logits) l = std::min(l - lse, 0.0);
  if (psi_out) *psi_out = std::move(psi);
  return logits;
}

void require_answer_index(const Instance& instance, std::size_t answer_index) {
  if (answer_index >= instance.answer_candidates().size()) {
    throw InvariantError("instance '" + instance.id() + "': answer index " +
                         std::to_string(answer_index) + " out of range");
  }
}

}  // namespace

Vector answer_features(const Instance& instance, const Permutation& perm,
                       std::size_t answer_index) {
  require_answer_index(instance, answer_index);
  validate_permutation(perm, instance.pool_size());
  return features_with_links(instance, perm, answer_index,
                             link_depths(instance, perm));
}

Vector answer_features(const Instance& instance, const Permutation& perm,
                       std::string_view answer) {
  return answer_features(instance, perm, instance.answer_index(answer));
}

double answer_log_prob(const GeneratorParams& params, const Instance& instance,
                       const Permutation& perm, std::size_t answer_index) {
  require_answer_index(instance, answer_index);
  return answer_log_softmax(params, instance, perm, nullptr)[answer_index];
}

double answer_log_prob(const GeneratorParams& params, const Instance& instance,
                       const Permutation& perm, std::string_view answer) {
  return answer_log_prob(params, instance, perm, instance.answer_index(answer));
}

Vector answer_log_prob_grad(const GeneratorParams& params,
                            const Instance& instance, const Permutation& perm,
                            std::size_t answer_index) {
  require_answer_index(instance, answer_index);
  std::vector<Vector> psi;
  const auto logp = answer_log_softmax(params, instance, perm, &psi);
  Vector grad = psi[answer_index];
  for (std::size_t a = 0; a < psi.size(); ++a) {
    const double p = std::exp(logp[a]);
    for (std::size_t d = 0; d < grad.size(); ++d) grad[d] -= p * psi[a][d];
  }
  return grad;
}

Vector answer_log_prob_grad(const GeneratorParams& params,
                            const Instance& instance, const Permutation& perm,
                            std::string_view answer) {
  return answer_log_prob_grad(params, instance, perm,
                              instance.answer_index(answer));
}

std::string predict_answer(const GeneratorParams& params,
                           const Instance& instance, const Permutation& perm) {
  const auto logp = answer_log_softmax(params, instance, perm, nullptr);
  // max_element returns the first maximum, which is the list-order tie-break.
  const auto best = std::max_element(logp.begin(), logp.end()) - logp.begin();
  return instance.answer_candidates()[static_cast<std::size_t>(best)];
}

}  // namespace dro
