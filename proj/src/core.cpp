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

#include "dro/core.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "dro/error.hpp"
#include "dro/text.hpp"

namespace dro {

using nlohmann::json;

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvariantError("dot: dimension mismatch (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::lexical ? "lexical" : "provided";
}

FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "provided") return FeatureMode::provided;
  if (text == "lexical") return FeatureMode::lexical;
  throw ParseError("unknown feature mode '" + std::string(text) + "'");
}

Instance::Instance(std::string id, std::string query, std::string answer,
                   std::vector<std::string> answer_candidates,
                   std::vector<Candidate> candidates)
    : id_(std::move(id)),
      query_(std::move(query)),
      answer_(std::move(answer)),
      answer_candidates_(std::move(answer_candidates)),
      candidates_(std::move(candidates)) {
  auto fail = [this](const std::string& field, const std::string& what) {
    throw InvariantError("instance '" + id_ + "': field '" + field + "': " +
                         what);
  };
  if (candidates_.empty()) fail("candidates", "pool must be non-empty");
  std::set<std::string_view> seen;
  for (const auto& c : candidates_) {
    if (!seen.insert(c.doc_id).second) {
      fail("candidates", "duplicate doc_id '" + c.doc_id + "'");
    }
  }
  if (answer_candidates_.empty()) {
    fail("answer_candidates", "needs at least 1 entry");
  }
  const auto gold_count =
      std::count(answer_candidates_.begin(), answer_candidates_.end(), answer_);
  if (gold_count != 1) {
    fail("answer_candidates", "gold answer must appear exactly once (found " +
                                  std::to_string(gold_count) + ")");
  }
  std::set<std::string_view> distinct(answer_candidates_.begin(),
                                      answer_candidates_.end());
  if (distinct.size() != answer_candidates_.size()) {
    fail("answer_candidates", "entries must be distinct");
  }
  std::optional<std::size_t> dim;
  for (const auto& c : candidates_) {
    if (!c.features) continue;
    if (dim && *dim != c.features->size()) {
      fail("features", "inconsistent feature dimension in doc '" + c.doc_id +
                           "'");
    }
    dim = c.features->size();
    for (const double v : *c.features) {
      if (!std::isfinite(v)) fail("features", "non-finite entry in '" + c.doc_id + "'");
    }
  }

  gold_index_ = static_cast<std::size_t>(
      std::find(answer_candidates_.begin(), answer_candidates_.end(), answer_) -
      answer_candidates_.begin());
  query_tokens_ = tokenize(query_);
  doc_tokens_.reserve(candidates_.size());
  for (const auto& c : candidates_) doc_tokens_.push_back(tokenize(c.text));
  answer_tokens_.reserve(answer_candidates_.size());
  for (const auto& a : answer_candidates_) answer_tokens_.push_back(tokenize(a));
}

bool Instance::has_features() const {
  return std::all_of(candidates_.begin(), candidates_.end(),
                     [](const Candidate& c) { return c.features.has_value(); });
}

std::size_t Instance::feature_dimension() const {
  for (const auto& c : candidates_) {
    if (c.features) return c.features->size();
  }
  return 0;
}

std::size_t Instance::answer_index(std::string_view answer) const {
  const auto it =
      std::find(answer_candidates_.begin(), answer_candidates_.end(), answer);
  if (it == answer_candidates_.end()) {
    throw InvariantError("instance '" + id_ + "': answer '" +
                         std::string(answer) + "' is not a candidate");
  }
  return static_cast<std::size_t>(it - answer_candidates_.begin());
}

void validate_permutation(const Permutation& perm, std::size_t n) {
  std::vector<bool> used(n, false);
  for (const auto j : perm.docids) {
    if (j >= n) {
      throw InvariantError("permutation entry " + std::to_string(j) +
                           " out of range for pool of " + std::to_string(n));
    }
    if (used[j]) {
      throw InvariantError("permutation repeats entry " + std::to_string(j));
    }
    used[j] = true;
  }
}

Vector featurize(std::string_view query, std::string_view doc_text,
                 const FeatureSpec& spec) {
  Vector out(spec.dimension, 0.0);
  const auto q = tokenize(query);
  const auto d = tokenize(doc_text);
  const std::unordered_set<std::string> doc_set(d.begin(), d.end());

  double overlap = 0.0;
  const std::size_t buckets = spec.dimension > 3 ? spec.dimension - 3 : 0;
  for (const auto& token : q) {
    if (!doc_set.contains(token)) continue;
    overlap += 1.0;
    if (buckets > 0) out[3 + fnv1a(token) % buckets] += 1.0;
  }
  const double normalized = q.empty() ? 0.0 : overlap / static_cast<double>(q.size());
  const double length = std::log1p(static_cast<double>(d.size()));
  if (spec.dimension > 0) out[0] = overlap;
  if (spec.dimension > 1) out[1] = normalized;
  if (spec.dimension > 2) out[2] = length;
  return out;
}

namespace {

void reject_unknown(const json& object, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ParseError(where + ": unknown field '" + key + "'");
    }
  }
}

template <class T>
T required(const json& object, const char* key, const std::string& where) {
  if (!object.contains(key)) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  try {
    return object.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field '" + key + "': " + e.what());
  }
}

Instance instance_from_json(const json& record, const FeatureSpec& spec,
                            const std::string& where) {
  if (!record.is_object()) throw ParseError(where + ": expected an object");
  reject_unknown(record, {"id", "query", "answer", "answer_candidates", "candidates"},
                 where);
  auto id = required<std::string>(record, "id", where);
  const std::string here = where + " (instance '" + id + "')";
  auto query = required<std::string>(record, "query", here);
  auto answer = required<std::string>(record, "answer", here);
  auto answers = required<std::vector<std::string>>(record, "answer_candidates", here);
  const auto& pool = record.contains("candidates") ? record.at("candidates") : json();
  if (!pool.is_array()) throw ParseError(here + ": field 'candidates' must be an array");

  std::vector<Candidate> candidates;
  candidates.reserve(pool.size());
  for (const auto& entry : pool) {
    if (!entry.is_object()) throw ParseError(here + ": candidate must be an object");
    reject_unknown(entry, {"doc_id", "text", "features"}, here + " candidate");
    Candidate c;
    c.doc_id = required<std::string>(entry, "doc_id", here + " candidate");
    c.text = required<std::string>(entry, "text", here + " candidate");
    if (entry.contains("features")) {
      c.features = required<Vector>(entry, "features", here + " candidate");
      if (c.features->size() != spec.dimension) {
        throw InvariantError("instance '" + id + "': field 'features': doc '" +
                             c.doc_id + "' has dimension " +
                             std::to_string(c.features->size()) + ", expected " +
                             std::to_string(spec.dimension));
      }
    } else if (spec.mode == FeatureMode::lexical) {
      c.features = featurize(query, c.text, spec);
    } else {
      throw InvariantError("instance '" + id + "': field 'features': doc '" +
                           c.doc_id + "' has no features in provided mode");
    }
    candidates.push_back(std::move(c));
  }
  if (answers.size() < 2) {
    throw InvariantError("instance '" + id +
                         "': field 'answer_candidates': needs at least 2 entries");
  }
  return Instance(std::move(id), std::move(query), std::move(answer),
                  std::move(answers), std::move(candidates));
}

json instance_to_json(const Instance& instance) {
  json pool = json::array();
  for (const auto& c : instance.candidates()) {
    json entry = {{"doc_id", c.doc_id}, {"text", c.text}};
    if (c.features) entry["features"] = *c.features;
    pool.push_back(std::move(entry));
  }
  return json{{"id", instance.id()},
              {"query", instance.query()},
              {"answer", instance.answer()},
              {"answer_candidates", instance.answer_candidates()},
              {"candidates", std::move(pool)}};
}

}  // namespace

std::vector<Instance> parse_dataset(std::string_view text, const FeatureSpec& spec) {
  std::vector<Instance> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    out.push_back(instance_from_json(record, spec, where));
  }
  return out;
}

std::vector<Instance> load_dataset(const std::filesystem::path& path,
                                   const FeatureSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), spec);
}

std::string serialize_dataset(std::span<const Instance> instances) {
  std::string out;
  for (const auto& instance : instances) {
    out += instance_to_json(instance).dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path,
                   std::span<const Instance> instances) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset '" + path.string() + "'");
  out << serialize_dataset(instances);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace dro
