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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dro {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);

struct Candidate {
  std::string doc_id;
  std::string text;
  std::optional<Vector> features;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Ordered selection of K distinct pool indices.
struct Permutation {
  std::vector<std::size_t> docids;

  std::size_t size() const { return docids.size(); }
  friend auto operator<=>(const Permutation&, const Permutation&) = default;
};

enum class FeatureMode { provided, lexical };

struct FeatureSpec {
  std::size_t dimension = 16;
  FeatureMode mode = FeatureMode::provided;
};

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view text);

/// One task: a query, its candidate pool, a closed answer set and the gold
/// answer. Validated and tokenized on construction, immutable afterwards.
/// A single-answer set is accepted here (degenerate generator); dataset
/// files require at least two answer candidates.
class Instance {
 public:
  Instance(std::string id, std::string query, std::string answer,
           std::vector<std::string> answer_candidates,
           std::vector<Candidate> candidates);

  const std::string& id() const { return id_; }
  const std::string& query() const { return query_; }
  const std::string& answer() const { return answer_; }
  const std::vector<std::string>& answer_candidates() const {
    return answer_candidates_;
  }
  const std::vector<Candidate>& candidates() const { return candidates_; }
  std::size_t pool_size() const { return candidates_.size(); }

  /// True when every candidate carries a feature vector.
  bool has_features() const;
  /// Feature dimension, or 0 when features are absent.
  std::size_t feature_dimension() const;

  const std::vector<std::string>& query_tokens() const { return query_tokens_; }
  const std::vector<std::string>& doc_tokens(std::size_t j) const {
    return doc_tokens_.at(j);
  }
  const std::vector<std::string>& answer_tokens(std::size_t a) const {
    return answer_tokens_.at(a);
  }
  const std::vector<std::string>& gold_tokens() const {
    return answer_tokens_[gold_index_];
  }

  std::size_t gold_index() const { return gold_index_; }
  /// Index of `answer` in answer_candidates; throws InvariantError if absent.
  std::size_t answer_index(std::string_view answer) const;

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.id_ == b.id_ && a.query_ == b.query_ && a.answer_ == b.answer_ &&
           a.answer_candidates_ == b.answer_candidates_ &&
           a.candidates_ == b.candidates_;
  }

 private:
  std::string id_;
  std::string query_;
  std::string answer_;
  std::vector<std::string> answer_candidates_;
  std::vector<Candidate> candidates_;
  std::size_t gold_index_ = 0;
  std::vector<std::string> query_tokens_;
  std::vector<std::vector<std::string>> doc_tokens_;
  std::vector<std::vector<std::string>> answer_tokens_;
};

/// Throws InvariantError unless `perm` has distinct entries, all < n.
void validate_permutation(const Permutation& perm, std::size_t n);

/// Deterministic lexical features of a (query, document) pair:
///   [0] count of query tokens present in the document
///   [1] that count divided by the query length
///   [2] log(1 + document length)
///   [3..D) hashed buckets of the overlapping tokens
Vector featurize(std::string_view query, std::string_view doc_text,
                 const FeatureSpec& spec);

/// Reads newline-delimited JSON instances. Blank lines are skipped. Lexical
/// features are filled in when spec.mode is lexical and a candidate has none.
std::vector<Instance> load_dataset(const std::filesystem::path& path,
                                   const FeatureSpec& spec);
std::vector<Instance> parse_dataset(std::string_view text,
                                    const FeatureSpec& spec);

void write_dataset(const std::filesystem::path& path,
                   std::span<const Instance> instances);
std::string serialize_dataset(std::span<const Instance> instances);

}  // namespace dro
