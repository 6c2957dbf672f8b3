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

#include "dro/metrics.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "dro/error.hpp"
#include "dro/text.hpp"

namespace dro {

int exact_match(std::string_view pred, std::string_view gold) {
  return tokenize(pred) == tokenize(gold) ? 1 : 0;
}

double token_f1(std::string_view pred, std::string_view gold) {
  const auto p = tokenize(pred);
  const auto g = tokenize(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> bag;
  for (const auto& t : g) ++bag[t];
  std::size_t common = 0;
  for (const auto& t : p) {
    auto it = bag.find(t);
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

int recall_at_k(std::span<const std::size_t> ranked, const Instance& instance,
                std::size_t k) {
  if (k == 0 || k > ranked.size()) {
    throw InvariantError("recall_at_k: k=" + std::to_string(k) +
                         " outside [1, " + std::to_string(ranked.size()) + "]");
  }
  const auto& gold = instance.gold_tokens();
  for (std::size_t t = 0; t < k; ++t) {
    if (contains_subsequence(instance.doc_tokens(ranked[t]), gold)) return 1;
  }
  return 0;
}

double mean_raw_weight(std::span<const WeightedSampleSet> sets) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& set : sets) {
    for (const auto& s : set.samples) {
      sum += s.raw_weight;
      ++count;
    }
  }
  if (count == 0) throw InvariantError("mean_raw_weight: no samples");
  return sum / static_cast<double>(count);
}

double weight_variance(std::span<const WeightedSampleSet> sets) {
  std::size_t count = 0;
  for (const auto& set : sets) count += set.samples.size();
  if (count < 2) throw InvariantError("weight_variance: need at least 2 samples");
  const double mean = mean_raw_weight(sets);
  double ss = 0.0;
  for (const auto& set : sets) {
    for (const auto& s : set.samples) ss += (s.raw_weight - mean) * (s.raw_weight - mean);
  }
  return ss / static_cast<double>(count - 1);
}

}  // namespace dro
