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

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <gtest/gtest.h>

#include "dro/error.hpp"
#include "dro/generator.hpp"
#include "dro/oracle.hpp"
#include "dro/synthenv.hpp"
#include "dro/text.hpp"
#include "dro/trainer.hpp"

namespace dro {
namespace {

TaskSpec small_spec() {
  TaskSpec spec;
  spec.num_instances = 30;
  return spec;
}

std::vector<std::size_t> docs_containing(const Instance& inst, const std::string& token) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < inst.pool_size(); ++j) {
    const auto& toks = inst.doc_tokens(j);
    if (std::find(toks.begin(), toks.end(), token) != toks.end()) out.push_back(j);
  }
  return out;
}

TEST(GenerateTask, EmptySpec) {
  TaskSpec spec;
  spec.num_instances = 0;
  EXPECT_TRUE(generate_task(spec).empty());
}

TEST(GenerateTask, VocabTermIsOneToken) {
  EXPECT_EQ(vocab_term(17), "term0017");
  EXPECT_EQ(tokenize(vocab_term(17)).size(), 1u);
}

TEST(GenerateTask, Deterministic) {
  const auto spec = small_spec();
  EXPECT_EQ(serialize_dataset(generate_task(spec)), serialize_dataset(generate_task(spec)));
  auto other = spec;
  other.seed = spec.seed + 1;
  EXPECT_NE(serialize_dataset(generate_task(spec)), serialize_dataset(generate_task(other)));
}

TEST(GenerateTask, Shape) {
  const auto spec = small_spec();
  const auto data = generate_task(spec);
  ASSERT_EQ(data.size(), spec.num_instances);
  for (const auto& inst : data) {
    EXPECT_EQ(inst.pool_size(), spec.n);
    EXPECT_EQ(inst.feature_dimension(), spec.dimension);
    EXPECT_EQ(inst.answer_candidates().size(), spec.num_distractor_answers + spec.num_absent_answers + 1);
    EXPECT_EQ(inst.query_tokens().size(), kQueryTerms);
    // Exactly one doc holds the gold answer.
    EXPECT_EQ(docs_containing(inst, inst.answer()).size(), 1u);
  }
}

TEST(GenerateTask, EvidenceChainLinksQueryToGold) {
  for (const std::size_t hops : {1u, 2u, 3u}) {
    auto spec = small_spec();
    spec.hops = hops;
    for (const auto& inst : generate_task(spec)) {
      // Count token occurrences across docs; shared tokens are the links.
      std::unordered_map<std::string, std::size_t> df;
      for (std::size_t j = 0; j < inst.pool_size(); ++j) {
        for (const auto& t : inst.doc_tokens(j)) ++df[t];
      }
      // Walk from the gold doc back to a doc holding a query term.
      std::size_t doc = docs_containing(inst, inst.answer()).front();
      std::size_t steps = 1;
      const auto& q = inst.query_tokens();
      auto has_query_term = [&](std::size_t j) {
        return std::any_of(inst.doc_tokens(j).begin(), inst.doc_tokens(j).end(), [&](const auto& t) {
          return std::find(q.begin(), q.end(), t) != q.end();
        });
      };
      std::vector<bool> seen(inst.pool_size(), false);
      seen[doc] = true;
      while (!has_query_term(doc)) {
        std::size_t next = inst.pool_size();
        for (const auto& t : inst.doc_tokens(doc)) {
          if (df[t] != 2) continue;
          for (const auto j : docs_containing(inst, t)) {
            if (!seen[j]) next = j;
          }
        }
        ASSERT_LT(next, inst.pool_size()) << inst.id();
        seen[next] = true;
        doc = next;
        ++steps;
      }
      EXPECT_EQ(steps, hops) << inst.id();
    }
  }
}

TEST(GenerateTask, NoiselessEvidenceIsMostRelevant) {
  auto spec = small_spec();
  spec.hops = 1;
  spec.feature_noise = 0.0;
  for (const auto& inst : generate_task(spec)) {
    const auto gold_doc = docs_containing(inst, inst.answer()).front();
    const double top = (*inst.candidates()[gold_doc].features)[kRelevanceFeature];
    for (std::size_t j = 0; j < inst.pool_size(); ++j) {
      if (j != gold_doc) EXPECT_LT((*inst.candidates()[j].features)[kRelevanceFeature], top);
    }
  }
}

TEST(GenerateTask, FullEvidenceBeatsPartialEvidence) {
  TaskSpec spec;
  spec.num_instances = 5;
  spec.n = 6;
  spec.hops = 2;
  spec.feature_noise = 0.0;
  const auto gen = oracle_generator();
  ASSERT_GT(gen.weights[kContainCount], 0.0);
  for (const auto& inst : generate_task(spec)) {
    std::vector<std::size_t> evidence;
    for (std::size_t j = 0; j < inst.pool_size(); ++j) {
      if ((*inst.candidates()[j].features)[kRelevanceFeature] > 0.5) evidence.push_back(j);
    }
    ASSERT_EQ(evidence.size(), 2u);
    double worst_full = INFINITY, best_partial = -INFINITY;
    for (const auto& z : enumerate_perms(inst.pool_size(), 2)) {
      const bool full = std::is_permutation(z.docids.begin(), z.docids.end(), evidence.begin());
      const double lp = answer_log_prob(gen, inst, z, inst.answer());
      if (full) worst_full = std::min(worst_full, lp);
      else best_partial = std::max(best_partial, lp);
    }
    EXPECT_GT(worst_full, best_partial) << inst.id();
  }
}

TEST(GenerateTask, OracleParametersSolveNoiselessTask) {
  auto spec = small_spec();
  spec.feature_noise = 0.0;
  const auto data = generate_task(spec);
  const auto report = evaluate(oracle_selector(spec.dimension), oracle_generator(), data, {5});
  EXPECT_EQ(report.em, 1.0);
  EXPECT_EQ(report.f1, 1.0);
  EXPECT_EQ(report.recall_at.at(5), 1.0);
}

TEST(GenerateTask, RandomSelectionFallsShortOfCeiling) {
  const auto data = generate_task(small_spec());
  const auto ceiling =
      evaluate(oracle_selector(16), oracle_generator(), data, {5}).recall_at.at(5);
  Rng rng(5);
  double hits = 0.0, draws = 0.0;
  for (const auto& inst : data) {
    for (const auto& z : sample_perms(SelectorParams{Vector(16, 0.0)}, inst, {5}, 20, rng)) {
      const auto gold = inst.gold_tokens();
      hits += std::any_of(z.docids.begin(), z.docids.end(), [&](std::size_t j) {
        return contains_subsequence(inst.doc_tokens(j), gold);
      });
      draws += 1.0;
    }
  }
  EXPECT_LT(hits / draws, ceiling);
}

TEST(TaskSpec, Validation) {
  TaskSpec spec;
  spec.hops = 0;
  EXPECT_THROW(validate(spec), InvariantError);
  spec.hops = 4;
  EXPECT_THROW(validate(spec), InvariantError);
  spec = TaskSpec{};
  spec.n = 3;
  EXPECT_THROW(validate(spec), InvariantError);
  spec = TaskSpec{};
  spec.vocab_size = 10;
  EXPECT_THROW(validate(spec), InvariantError);
  spec = TaskSpec{};
  spec.dimension = 1;
  EXPECT_THROW(validate(spec), InvariantError);
  spec = TaskSpec{};
  spec.feature_noise = -0.1;
  EXPECT_THROW(validate(spec), InvariantError);
  EXPECT_NO_THROW(validate(TaskSpec{}));
}

}  // namespace
}  // namespace dro
