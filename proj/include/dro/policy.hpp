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
#include <vector>

#include "dro/core.hpp"
#include "dro/random.hpp"

namespace dro {

/// Linear scorer weights of the list-wise selector.
struct SelectorParams {
  Vector weights;

  friend bool operator==(const SelectorParams&, const SelectorParams&) = default;
};

struct SelectionConfig {
  std::size_t k = 5;
};

/// Per-document logits: score_j = <weights, features_j>.
Vector doc_scores(const SelectorParams& params, const Instance& instance);

/// Plackett-Luce log-probability of an ordered selection:
///   log p(z) = sum_t [ s_{z_t} - logsumexp_{j not in z_<t} s_j ].
double perm_log_prob(const SelectorParams& params, const Instance& instance,
                     const Permutation& perm);
double perm_log_prob_from_scores(std::span<const double> scores,
                                 const Permutation& perm);

/// d/dtheta log p(z): sum_t [ phi_{z_t} - sum_{j remaining} softmax_j phi_j ].
Vector perm_log_prob_grad(const SelectorParams& params, const Instance& instance,
                          const Permutation& perm);

/// m i.i.d. draws, each built by sequential softmax sampling without
/// replacement. Duplicates across draws are kept.
std::vector<Permutation> sample_perms(const SelectorParams& params,
                                      const Instance& instance,
                                      const SelectionConfig& cfg, std::size_t m,
                                      Rng& rng);

/// Deterministic decode: repeated argmax over the remaining documents,
/// ties to the lower index. Returns `length` entries.
Permutation greedy_perm(const SelectorParams& params, const Instance& instance,
                        std::size_t length);

}  // namespace dro
