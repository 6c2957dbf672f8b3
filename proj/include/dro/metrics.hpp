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
#include <map>
#include <span>
#include <string_view>

#include "dro/core.hpp"
#include "dro/estep.hpp"

namespace dro {

/// Cutoffs reported for Recall@K.
inline constexpr std::size_t kRecallCutoffs[] = {1, 3, 5};

struct MetricReport {
  double em = 0.0;
  double f1 = 0.0;
  std::map<std::size_t, double> recall_at;
  std::size_t count = 0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// 1 iff the normalized token sequences are equal.
int exact_match(std::string_view pred, std::string_view gold);

/// Bag-of-tokens F1. Both empty -> 1, exactly one empty -> 0.
double token_f1(std::string_view pred, std::string_view gold);

/// 1 iff one of the first k ranked docs contains the normalized gold answer
/// as a contiguous token run. Throws unless 0 < k <= ranked.size().
int recall_at_k(std::span<const std::size_t> ranked, const Instance& instance,
                std::size_t k);

/// Unbiased sample variance of raw weights pooled over all sets.
double weight_variance(std::span<const WeightedSampleSet> sets);

/// Mean raw weight pooled over all sets.
double mean_raw_weight(std::span<const WeightedSampleSet> sets);

}  // namespace dro
