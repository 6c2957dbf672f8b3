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

#include "dro/oracle.hpp"

#include <cmath>
#include <limits>

#include "dro/error.hpp"

namespace dro {

std::size_t permutation_count(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t count = 1;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t factor = n - i;
    if (count > std::numeric_limits<std::size_t>::max() / factor) {
      return std::numeric_limits<std::size_t>::max();
    }
    count *= factor;
  }
  return count;
}

std::vector<Permutation> enumerate_perms(std::size_t n, std::size_t k,
                                         std::size_t cap) {
  if (k == 0 || k > n) {
    throw InvariantError("enumerate_perms: need 0 < K <= n (K=" +
                         std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  const auto count = permutation_count(n, k);
  if (count > cap) {
    throw CapExceededError("enumerate_perms: " + std::to_string(n) + "!/(" +
                           std::to_string(n) + "-" + std::to_string(k) +
                           ")! permutations exceed the cap of " +
                           std::to_string(cap));
  }
  std::vector<Permutation> out;
  out.reserve(count);
  std::vector<std::size_t> prefix;
  std::vector<bool> used(n, false);
  // Depth-first in increasing index order yields lexicographic output.
  auto recurse = [&](auto&& self) -> void {
    if (prefix.size() == k) {
      out.push_back(Permutation{prefix});
      return;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      used[j] = true;
      prefix.push_back(j);
      self(self);
      prefix.pop_back();
      used[j] = false;
    }
  };
  recurse(recurse);
  return out;
}

double PosteriorTable::log_marginal() const { return std::log(marginal); }

PosteriorTable exact_posterior(const SelectorParams& selector,
                               const GeneratorParams& generator,
                               const Instance& instance,
                               const SelectionConfig& cfg, std::size_t cap) {
  PosteriorTable table;
  table.perms = enumerate_perms(instance.pool_size(), cfg.k, cap);
  const auto scores = doc_scores(selector, instance);
  const auto gold = instance.gold_index();
  const std::size_t count = table.perms.size();
  table.proposal_probs.resize(count);
  table.likelihoods.resize(count);
  table.joint_probs.resize(count);
  table.posterior_probs.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& perm = table.perms[i];
    table.proposal_probs[i] = std::exp(perm_log_prob_from_scores(scores, perm));
    table.likelihoods[i] = std::exp(answer_log_prob(generator, instance, perm, gold));
    table.joint_probs[i] = table.proposal_probs[i] * table.likelihoods[i];
    table.marginal += table.joint_probs[i];
  }
  if (!(table.marginal > 0.0)) {
    throw InvariantError("exact_posterior: marginal likelihood underflowed for '" +
                         instance.id() + "'");
  }
  for (std::size_t i = 0; i < count; ++i) {
    table.posterior_probs[i] = table.joint_probs[i] / table.marginal;
  }
  return table;
}

ElboEstimate exact_elbo(const PosteriorTable& table, std::span<const double> q) {
  if (q.size() != table.perms.size()) {
    throw InvariantError("exact_elbo: q has " + std::to_string(q.size()) +
                         " entries, table has " + std::to_string(table.perms.size()));
  }
  double total = 0.0;
  for (const double v : q) {
    if (v < 0.0) throw InvariantError("exact_elbo: q has a negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-8) {
    throw InvariantError("exact_elbo: q sums to " + std::to_string(total));
  }
  ElboEstimate out;
  out.log_marginal = table.log_marginal();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    const double log_q = std::log(q[i]);
    out.elbo += q[i] * (std::log(table.joint_probs[i]) - log_q);
    out.entropy -= q[i] * log_q;
  }
  out.gap = out.log_marginal - out.elbo;
  return out;
}

VarianceReport variance_report(const PosteriorTable& table, const PermFunction& f) {
  VarianceReport r;
  double post_f = 0.0, post_f2 = 0.0;
  double prop_rf = 0.0, prop_rf2 = 0.0;
  for (std::size_t i = 0; i < table.perms.size(); ++i) {
    const double prop = table.proposal_probs[i];
    const double post = table.posterior_probs[i];
    if (prop <= 0.0 && post > 0.0) {
      throw InvariantError("variance_report: posterior mass outside proposal support");
    }
    const double fv = f(table.perms[i]);
    const double ratio = prop > 0.0 ? post / prop : 0.0;
    post_f += post * fv;
    post_f2 += post * fv * fv;
    prop_rf += prop * ratio * fv;
    prop_rf2 += prop * ratio * ratio * fv * fv;
    r.ratio_identity += post * fv * fv * (ratio - 1.0);
    r.delta_var_likelihood_form += post * fv * fv * (table.likelihoods[i] - 1.0);
  }
  r.mean_posterior = post_f;
  r.weighted_mean_proposal = prop_rf;
  r.var_posterior_f = post_f2 - post_f * post_f;
  r.var_proposal_weighted_f = prop_rf2 - prop_rf * prop_rf;
  r.delta_var_exact = r.var_proposal_weighted_f - r.var_posterior_f;
  return r;
}

ExpectedGrads exact_expected_grads(const SelectorParams& selector,
                                   const GeneratorParams& generator,
                                   const Instance& instance,
                                   const SelectionConfig& cfg, std::size_t cap) {
  const auto table = exact_posterior(selector, generator, instance, cfg, cap);
  const auto gold = instance.gold_index();
  ExpectedGrads out{Vector(selector.weights.size(), 0.0),
                    Vector(generator.weights.size(), 0.0)};
  for (std::size_t i = 0; i < table.perms.size(); ++i) {
    const double mass = table.joint_probs[i];  // p(z|x) * w(z)
    const auto gs = perm_log_prob_grad(selector, instance, table.perms[i]);
    const auto gg = answer_log_prob_grad(generator, instance, table.perms[i], gold);
    for (std::size_t d = 0; d < gs.size(); ++d) out.selection[d] += mass * gs[d];
    for (std::size_t d = 0; d < gg.size(); ++d) out.generation[d] += mass * gg[d];
  }
  return out;
}

}  // namespace dro
