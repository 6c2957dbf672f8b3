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
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "dro/error.hpp"
#include "dro/oracle.hpp"
#include "dro/policy.hpp"
#include "oracles.hpp"

namespace dro {
namespace {

Instance with_features(std::vector<Vector> features) {
  std::vector<Candidate> pool;
  for (std::size_t j = 0; j < features.size(); ++j) {
    pool.push_back({"d" + std::to_string(j), "text", features[j]});
  }
  return Instance("i", "q", "y", {"y", "z"}, pool);
}

TEST(DocScores, ZeroWeights) {
  const auto inst = with_features({{1.0, 2.0}, {-3.0, 4.0}});
  for (const double s : doc_scores(SelectorParams{{0.0, 0.0}}, inst)) EXPECT_EQ(s, 0.0);
}

TEST(DocScores, BasisVectorPicksComponent) {
  const auto inst = with_features({{1.5, 2.0}, {-3.0, 4.0}});
  const auto s = doc_scores(SelectorParams{{1.0, 0.0}}, inst);
  EXPECT_EQ(s[0], 1.5);
  EXPECT_EQ(s[1], -3.0);
}

TEST(DocScores, MatchesSummation) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = testing::random_instance(rng, 6, 9);
    const SelectorParams p{testing::random_vector(rng, 9)};
    const auto s = doc_scores(p, inst);
    for (std::size_t j = 0; j < inst.pool_size(); ++j) {
      double expected = 0.0;
      for (std::size_t d = 0; d < 9; ++d) expected += p.weights[d] * (*inst.candidates()[j].features)[d];
      EXPECT_NEAR(s[j], expected, 1e-12);
    }
  }
}

TEST(DocScores, DimensionMismatch) {
  const auto inst = with_features({{1.0, 2.0}});
  EXPECT_THROW(doc_scores(SelectorParams{{1.0}}, inst), InvariantError);
}

TEST(PermLogProb, EqualScoresTwoDocs) {
  EXPECT_NEAR(perm_log_prob_from_scores(Vector{0.3, 0.3}, Permutation{{1, 0}}),
              std::log(0.5), 1e-15);
}

TEST(PermLogProb, SoftmaxArithmetic) {
  EXPECT_NEAR(perm_log_prob_from_scores(Vector{std::log(2.0), 0.0, 0.0}, Permutation{{0}}),
              std::log(0.5), 1e-15);
}

TEST(PermLogProb, InvalidPermutation) {
  const auto inst = with_features({{1.0}, {2.0}, {3.0}});
  EXPECT_THROW(perm_log_prob(SelectorParams{{1.0}}, inst, Permutation{{0, 0}}), InvariantError);
  EXPECT_THROW(perm_log_prob(SelectorParams{{1.0}}, inst, Permutation{{5}}), InvariantError);
}

TEST(PermLogProb, MatchesBruteForceProducts) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto scores = testing::random_vector(rng, 5, 2.0);
    for (const auto& tuple : testing::brute_k_tuples(5, 3)) {
      ASSERT_NEAR(std::exp(perm_log_prob_from_scores(scores, Permutation{tuple})),
                  testing::brute_perm_prob(scores, tuple), 1e-13);
    }
  }
}

TEST(PermLogProb, SixtyPermutationsSumToOne) {
  std::mt19937_64 rng(3);
  const auto scores = testing::random_vector(rng, 5, 1.5);
  const auto perms = enumerate_perms(5, 3);
  ASSERT_EQ(perms.size(), 60u);
  double total = 0.0;
  for (const auto& z : perms) total += std::exp(perm_log_prob_from_scores(scores, z));
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(PermLogProb, NormalizationAllSmallShapes) {
  std::mt19937_64 rng(4);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t k = 1; k <= n; ++k) {
      const auto scores = testing::random_vector(rng, n, 2.0);
      double total = 0.0;
      for (const auto& z : enumerate_perms(n, k)) {
        const double lp = perm_log_prob_from_scores(scores, z);
        EXPECT_LE(lp, 0.0);
        total += std::exp(lp);
      }
      EXPECT_NEAR(total, 1.0, 1e-10) << "n=" << n << " k=" << k;
    }
  }
}

TEST(PermLogProb, ShiftInvariance) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto scores = testing::random_vector(rng, 6, 2.0);
    const Permutation z{{static_cast<std::size_t>(trial % 6), static_cast<std::size_t>((trial + 1) % 6),
                         static_cast<std::size_t>((trial + 3) % 6)}};
    const double before = perm_log_prob_from_scores(scores, z);
    const double shift = testing::random_vector(rng, 1, 5.0)[0];
    for (auto& s : scores) s += shift;
    EXPECT_NEAR(perm_log_prob_from_scores(scores, z), before, 1e-12);
  }
}

TEST(SamplePerms, SingleOutcome) {
  const auto inst = with_features({{0.7}});
  Rng rng(1);
  for (const auto& z : sample_perms(SelectorParams{{1.0}}, inst, {1}, 25, rng)) {
    EXPECT_EQ(z.docids, std::vector<std::size_t>{0});
  }
}

TEST(SamplePerms, KLargerThanPoolIsAnError) {
  const auto inst = with_features({{0.7}, {0.1}});
  Rng rng(1);
  EXPECT_THROW(sample_perms(SelectorParams{{1.0}}, inst, {3}, 1, rng), InvariantError);
}

TEST(SamplePerms, DeterministicGivenSeed) {
  std::mt19937_64 g(6);
  const auto inst = testing::random_instance(g, 8, 4);
  const SelectorParams p{testing::random_vector(g, 4)};
  Rng a(77), b(77);
  EXPECT_EQ(sample_perms(p, inst, {3}, 200, a), sample_perms(p, inst, {3}, 200, b));
}

TEST(SamplePerms, UniformFrequenciesWithinThreeSigma) {
  const auto inst = with_features({{1.0}, {1.0}, {1.0}});
  Rng rng(2024);
  const std::size_t m = 60'000;
  std::map<std::vector<std::size_t>, std::size_t> counts;
  for (const auto& z : sample_perms(SelectorParams{{0.4}}, inst, {2}, m, rng)) ++counts[z.docids];
  ASSERT_EQ(counts.size(), 6u);
  const double p = 1.0 / 6.0;
  const double se = std::sqrt(p * (1 - p) / m);
  for (const auto& [perm, count] : counts) {
    EXPECT_NEAR(static_cast<double>(count) / m, p, 3 * se);
  }
}

TEST(SamplePerms, FrequenciesMatchLogProb) {
  const auto inst = with_features({{1.2}, {0.0}, {-0.7}});
  const SelectorParams p{{1.0}};
  Rng rng(31337);
  const std::size_t m = 60'000;
  std::map<std::vector<std::size_t>, std::size_t> counts;
  for (const auto& z : sample_perms(p, inst, {2}, m, rng)) ++counts[z.docids];
  for (const auto& z : enumerate_perms(3, 2)) {
    const double prob = std::exp(perm_log_prob(p, inst, z));
    const double se = std::sqrt(prob * (1 - prob) / m);
    EXPECT_NEAR(static_cast<double>(counts[z.docids]) / m, prob, 3 * se);
  }
}

TEST(SamplePerms, ExtremeScoresStayValid) {
  const auto inst = with_features({{1000.0}, {-1000.0}, {0.0}, {960.0}});
  Rng rng(3);
  for (const auto& z : sample_perms(SelectorParams{{1.0}}, inst, {4}, 50, rng)) {
    EXPECT_NO_THROW(validate_permutation(z, 4));
    EXPECT_EQ(z.docids[0], 0u);
    EXPECT_EQ(z.docids[1], 3u);
  }
}

TEST(PermLogProbGrad, SingleDocIsZero) {
  const auto inst = with_features({{0.3, -2.0}});
  for (const double g : perm_log_prob_grad(SelectorParams{{1.0, 1.0}}, inst, Permutation{{0}})) {
    EXPECT_EQ(g, 0.0);
  }
}

TEST(PermLogProbGrad, EqualFeaturesGiveZero) {
  const auto inst = with_features({{0.3, -2.0}, {0.3, -2.0}, {0.3, -2.0}});
  for (const double g : perm_log_prob_grad(SelectorParams{{1.0, 0.5}}, inst, Permutation{{2, 0}})) {
    EXPECT_NEAR(g, 0.0, 1e-15);
  }
}

TEST(PermLogProbGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 6;
    const std::size_t k = 1 + rng() % n;
    const auto inst = testing::random_instance(rng, n, 16);
    const SelectorParams p{testing::random_vector(rng, 16, 0.5)};
    std::vector<std::size_t> ids(n);
    for (std::size_t j = 0; j < n; ++j) ids[j] = j;
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(k);
    const Permutation z{ids};
    const auto analytic = perm_log_prob_grad(p, inst, z);
    const auto numeric = testing::central_difference(
        [&](const Vector& w) { return perm_log_prob(SelectorParams{w}, inst, z); }, p.weights);
    EXPECT_LT(testing::relative_error(analytic, numeric), 1e-5) << "trial " << trial;
  }
}

TEST(GreedyPerm, TiesGoToLowerIndex) {
  const auto inst = with_features({{1.0}, {2.0}, {2.0}, {0.5}});
  EXPECT_EQ(greedy_perm(SelectorParams{{1.0}}, inst, 3).docids,
            (std::vector<std::size_t>{1, 2, 0}));
}

}  // namespace
}  // namespace dro
