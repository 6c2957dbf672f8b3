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

#include "dro/synthenv.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <unordered_set>

#include "dro/error.hpp"
#include "dro/random.hpp"

namespace dro {

namespace {

enum class DocKind { evidence_head, evidence, distractor, noise };

struct DraftDoc {
  std::vector<std::string> tokens;
  DocKind kind;
};

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::size_t tokens_needed(const TaskSpec& spec) {
  return kQueryTerms + (spec.hops - 1) + 1 + spec.num_distractor_answers +
         spec.num_absent_answers +
         spec.n * kFillerTokensPerDoc;
}

Instance make_instance(const TaskSpec& spec, std::size_t index) {
  Rng rng(derive_seed(spec.seed, 0, std::to_string(index)));
  std::normal_distribution<double> noise(0.0, 1.0);

  // Distinct vocabulary draws for this instance.
  std::unordered_set<std::size_t> used;
  auto fresh = [&] {
    for (;;) {
      const auto v = static_cast<std::size_t>(rng() % spec.vocab_size);
      if (used.insert(v).second) return vocab_term(v);
    }
  };

  std::vector<std::string> query_terms;
  for (std::size_t i = 0; i < kQueryTerms; ++i) query_terms.push_back(fresh());
  std::vector<std::string> bridges;
  for (std::size_t i = 0; i + 1 < spec.hops; ++i) bridges.push_back(fresh());
  const std::string gold = fresh();
  std::vector<std::string> distractors;
  for (std::size_t i = 0; i < spec.num_distractor_answers; ++i) {
    distractors.push_back(fresh());
  }
  std::vector<std::string> absent;
  for (std::size_t i = 0; i < spec.num_absent_answers; ++i) absent.push_back(fresh());

  std::vector<DraftDoc> docs;
  // Evidence chain: query -> bridge_1 -> ... -> gold.
  for (std::size_t h = 0; h < spec.hops; ++h) {
    DraftDoc doc{{}, h == 0 ? DocKind::evidence_head : DocKind::evidence};
    doc.tokens.push_back(h == 0 ? query_terms[rng() % kQueryTerms] : bridges[h - 1]);
    doc.tokens.push_back(h + 1 == spec.hops ? gold : bridges[h]);
    docs.push_back(std::move(doc));
  }
  const std::size_t distractor_docs = std::min(
      spec.num_distractor_answers * kDistractorDocsPerAnswer, spec.n - spec.hops);
  for (std::size_t i = 0; i < distractor_docs; ++i) {
    DraftDoc doc{{}, DocKind::distractor};
    doc.tokens.push_back(query_terms[rng() % kQueryTerms]);
    doc.tokens.push_back(distractors[i % spec.num_distractor_answers]);
    docs.push_back(std::move(doc));
  }
  while (docs.size() < spec.n) docs.push_back(DraftDoc{{}, DocKind::noise});
  for (auto& doc : docs) {
    for (std::size_t f = 0; f < kFillerTokensPerDoc; ++f) doc.tokens.push_back(fresh());
    std::shuffle(doc.tokens.begin(), doc.tokens.end(), rng);
  }
  std::shuffle(docs.begin(), docs.end(), rng);

  std::vector<Candidate> candidates;
  candidates.reserve(docs.size());
  for (std::size_t j = 0; j < docs.size(); ++j) {
    const auto kind = docs[j].kind;
    Vector phi(spec.dimension, 0.0);
    const bool evidence = kind == DocKind::evidence_head || kind == DocKind::evidence;
    const bool lexical = kind == DocKind::evidence_head || kind == DocKind::distractor;
    phi[kRelevanceFeature] = evidence ? 1.0 : 0.0;
    phi[kLexicalFeature] = lexical ? 1.0 : 0.0;
    for (auto& v : phi) v += spec.feature_noise * noise(rng);
    char doc_id[32];
    std::snprintf(doc_id, sizeof doc_id, "d%02zu", j);
    candidates.push_back(Candidate{doc_id, join(docs[j].tokens), std::move(phi)});
  }

  std::vector<std::string> answers = distractors;
  answers.insert(answers.end(), absent.begin(), absent.end());
  answers.push_back(gold);
  std::shuffle(answers.begin(), answers.end(), rng);

  char id[32];
  std::snprintf(id, sizeof id, "syn-%06zu", index);
  return Instance(id, join(query_terms), gold, std::move(answers),
                  std::move(candidates));
}

}  // namespace

void validate(const TaskSpec& spec) {
  if (spec.hops < 1 || spec.hops > 3) throw InvariantError("TaskSpec: hops must be in [1, 3]");
  if (spec.n < spec.hops + 2) throw InvariantError("TaskSpec: n must be at least hops + 2");
  if (spec.num_distractor_answers == 0) {
    throw InvariantError("TaskSpec: num_distractor_answers must be positive");
  }
  if (spec.dimension < 2) throw InvariantError("TaskSpec: feature dimension must be >= 2");
  if (!(spec.feature_noise >= 0.0)) throw InvariantError("TaskSpec: feature_noise must be >= 0");
  if (spec.vocab_size < 2 * tokens_needed(spec)) {
    throw InvariantError("TaskSpec: vocab_size must be at least " +
                         std::to_string(2 * tokens_needed(spec)) + " for this pool size");
  }
}

std::string vocab_term(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "term%04zu", index);
  return buf;
}

std::vector<Instance> generate_task(const TaskSpec& spec) {
  validate(spec);
  std::vector<Instance> out;
  out.reserve(spec.num_instances);
  for (std::size_t i = 0; i < spec.num_instances; ++i) out.push_back(make_instance(spec, i));
  return out;
}

SelectorParams oracle_selector(std::size_t dimension) {
  SelectorParams p{Vector(dimension, 0.0)};
  p.weights[kRelevanceFeature] = 4.0;
  p.weights[kLexicalFeature] = -2.0;
  return p;
}

GeneratorParams oracle_generator() {
  GeneratorParams p{Vector(kAnswerFeatureDim, 0.0)};
  p.weights[kContainCount] = 1.0;
  p.weights[kRankDiscounted] = 1.0;
  p.weights[kChainDepth] = 2.0;
  return p;
}

SelectorParams initial_selector(std::size_t dimension) {
  SelectorParams p{Vector(dimension, 0.0)};
  p.weights[kRelevanceFeature] = 1.5;
  p.weights[kLexicalFeature] = 1.0;
  return p;
}

GeneratorParams initial_generator() {
  GeneratorParams p{Vector(kAnswerFeatureDim, 0.0)};
  p.weights[kContainCount] = 6.0;
  p.weights[kChainDepth] = 3.0;
  return p;
}

}  // namespace dro
