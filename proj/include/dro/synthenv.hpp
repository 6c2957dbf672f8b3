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
#include <string>
#include <vector>

#include "dro/core.hpp"
#include "dro/generator.hpp"
#include "dro/policy.hpp"

namespace dro {

/// Synthetic multi-hop retrieval tasks.
///
/// Each instance has a chain of `hops` evidence documents: the first shares
/// a term with the query, consecutive ones share a bridge term, and the last
/// one holds the gold answer. Distractor documents share a query term and
/// hold a distractor answer. Absent answers occur nowhere, so picking the
/// one candidate missing from the selected documents is not a winning
/// strategy. Every other token is unique within the
/// instance, so the only links between documents are the intended ones.
///
/// Candidate features: [0] true relevance (1 for evidence), [1] lexical match
/// with the query (1 for the first evidence doc and for distractors), all
/// remaining dimensions pure noise; every dimension gets N(0, feature_noise).
struct TaskSpec {
  std::size_t num_instances = 250;
  std::size_t n = 20;
  std::size_t hops = 2;
  std::size_t num_distractor_answers = 3;
  /// Extra answer candidates that occur in no document.
  std::size_t num_absent_answers = 16;
  std::size_t vocab_size = 5000;
  double feature_noise = 0.2;
  std::uint64_t seed = 17;
  std::size_t dimension = 16;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

inline constexpr std::size_t kQueryTerms = 2;
inline constexpr std::size_t kDistractorDocsPerAnswer = 2;
inline constexpr std::size_t kFillerTokensPerDoc = 4;

/// Feature dimensions with a fixed meaning.
enum TaskFeature : std::size_t { kRelevanceFeature = 0, kLexicalFeature = 1 };

void validate(const TaskSpec& spec);

/// Vocabulary entries rendered as "term0042"; a single token under tokenize().
std::string vocab_term(std::size_t index);

std::vector<Instance> generate_task(const TaskSpec& spec);

/// Hand-set selector that ranks evidence documents first, then noise
/// documents, then distractors.
SelectorParams oracle_selector(std::size_t dimension);

/// Hand-set generator that rewards supported containment.
GeneratorParams oracle_generator();

/// Default starting point for training: a selector that overweights lexical
/// match relative to relevance and a generator that strongly prefers
/// answers contained in, and linked through, the selected documents.
SelectorParams initial_selector(std::size_t dimension);
GeneratorParams initial_generator();

}  // namespace dro
