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
#include <string>
#include <string_view>

#include "dro/core.hpp"

namespace dro {

/// Number of answer features produced by answer_features().
inline constexpr std::size_t kAnswerFeatureDim = 5;

/// Indices into the answer feature vector.
enum AnswerFeature : std::size_t {
  kContainCount = 0,   // selected docs containing the answer
  kRankDiscounted = 1, // sum_t contains(d_{z_t}) / log2(t + 1)
  kQueryOverlap = 2,   // fraction of answer tokens also in the query
  kBias = 3,           // constant 1
  kChainDepth = 4,     // deepest link depth from the query, via selected docs, of a doc holding the answer
};

struct GeneratorParams {
  Vector weights;

  friend bool operator==(const GeneratorParams&, const GeneratorParams&) = default;
};

struct AnswerFeatureSpec {
  std::size_t dimension = kAnswerFeatureDim;
};

/// Features psi(answer | query, d_z). Rank-discounted containment makes the
/// representation order-sensitive.
Vector answer_features(const Instance& instance, const Permutation& perm,
                       std::string_view answer);
Vector answer_features(const Instance& instance, const Permutation& perm,
                       std::size_t answer_index);

/// log softmax over the closed answer set of <weights, psi(y)>.
double answer_log_prob(const GeneratorParams& params, const Instance& instance,
                       const Permutation& perm, std::string_view answer);
double answer_log_prob(const GeneratorParams& params, const Instance& instance,
                       const Permutation& perm, std::size_t answer_index);

/// psi(answer) - sum_y' p(y') psi(y').
Vector answer_log_prob_grad(const GeneratorParams& params,
                            const Instance& instance, const Permutation& perm,
                            std::string_view answer);
Vector answer_log_prob_grad(const GeneratorParams& params,
                            const Instance& instance, const Permutation& perm,
                            std::size_t answer_index);

/// Argmax answer, ties broken by candidate-list order.
std::string predict_answer(const GeneratorParams& params,
                           const Instance& instance, const Permutation& perm);

}  // namespace dro
