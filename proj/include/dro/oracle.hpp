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
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dro/core.hpp"
#include "dro/generator.hpp"
#include "dro/policy.hpp"

namespace dro {

inline constexpr std::size_t kDefaultEnumerationCap = 50'000;

/// n! / (n - k)!, saturating at SIZE_MAX.
std::size_t permutation_count(std::size_t n, std::size_t k);

/// All ordered k-tuples of distinct indices below n, in lexicographic order.
/// Throws CapExceededError when n!/(n-k)! > cap.
std::vector<Permutation> enumerate_perms(std::size_t n, std::size_t k,
                                         std::size_t cap = kDefaultEnumerationCap);

/// Exact joint, proposal and posterior over every K-permutation of one pool.
struct PosteriorTable {
  std::vector<Permutation> perms;
  Vector proposal_probs;   // p(z | x; theta_s)
  Vector likelihoods;      // p(y | x, d_z; theta_g), the unnormalized weight w(z)
  Vector joint_probs;      // p(y, z | x; theta)
  Vector posterior_probs;  // p(z | x, y; theta)
  double marginal = 0.0;   // p(y | x; theta)

  double log_marginal() const;
};

PosteriorTable exact_posterior(const SelectorParams& selector,
                               const GeneratorParams& generator,
                               const Instance& instance,
                               const SelectionConfig& cfg,
                               std::size_t cap = kDefaultEnumerationCap);

struct ElboEstimate {
  double elbo = 0.0;
  double log_marginal = 0.0;
  double gap = 0.0;      // log_marginal - elbo
  double entropy = 0.0;  // H(q)
};

/// ELBO(q) = sum_z q(z) [log p(y, z | x) - log q(z)], with 0 log 0 = 0.
/// Throws InvariantError unless q is aligned with table.perms and sums to 1
/// within 1e-8.
ElboEstimate exact_elbo(const PosteriorTable& table, std::span<const double> q);

struct VarianceReport {
  double var_posterior_f = 0.0;          // Var_posterior[f]
  double var_proposal_weighted_f = 0.0;  // Var_proposal[r f], r = posterior / proposal
  double delta_var_exact = 0.0;          // difference of the two above
  double ratio_identity = 0.0;           // E_posterior[f^2 (r - 1)]
  double delta_var_likelihood_form = 0.0;     // E_posterior[f^2 (w - 1)], w = likelihood
  double weighted_mean_proposal = 0.0;   // E_proposal[r f]
  double mean_posterior = 0.0;           // E_posterior[f]
};

using PermFunction = std::function<double(const Permutation&)>;

VarianceReport variance_report(const PosteriorTable& table, const PermFunction& f);

struct ExpectedGrads {
  Vector selection;   // sum_z p(z|x) w(z) grad log p(z | x; theta_s)
  Vector generation;  // sum_z p(z|x) w(z) grad log p(y | x, d_z; theta_g)
};

ExpectedGrads exact_expected_grads(const SelectorParams& selector,
                                   const GeneratorParams& generator,
                                   const Instance& instance,
                                   const SelectionConfig& cfg,
                                   std::size_t cap = kDefaultEnumerationCap);

}  // namespace dro
