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

#include "dro/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dro/error.hpp"
#include "dro/estep.hpp"
#include "dro/parallel.hpp"
#include "dro/random.hpp"

namespace dro {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;
constexpr std::string_view kCheckpointFormat = "dro-checkpoint";

/// Recall cutoffs need a ranking at least this long.
std::size_t ranking_length(const Instance& instance, const SelectionConfig& cfg) {
  const std::size_t longest = kRecallCutoffs[std::size(kRecallCutoffs) - 1];
  return std::min(instance.pool_size(), std::max(cfg.k, longest));
}

WeightedSampleSet exact_estep(const SelectorParams& selector,
                              const GeneratorParams& generator,
                              const Instance& instance,
                              const SelectionConfig& cfg, std::size_t cap) {
  auto perms = enumerate_perms(instance.pool_size(), cfg.k, cap);
  auto set = weigh_permutations(selector, generator, instance, std::move(perms));
  // Posterior weights: p(z|x) w(z) / p(y|x), via a log-space normalizer.
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& s : set.samples) {
    peak = std::max(peak, s.selector_log_prob + s.generator_log_prob);
  }
  double total = 0.0;
  for (auto& s : set.samples) {
    s.norm_weight = std::exp(s.selector_log_prob + s.generator_log_prob - peak);
    total += s.norm_weight;
  }
  for (auto& s : set.samples) s.norm_weight /= total;
  return set;
}

double mean_log_marginal(const SelectorParams& selector,
                         const GeneratorParams& generator,
                         std::span<const Instance> data, const SelectionConfig& cfg,
                         std::size_t cap, int workers) {
  Vector values(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) {
    values[i] = exact_posterior(selector, generator, data[i], cfg, cap).log_marginal();
  });
  double total = 0.0;
  for (const double v : values) total += v;
  return total / static_cast<double>(data.size());
}

[[noreturn]] void report_divergence(std::span<const Instance> batch,
                                    std::span<const WeightedSampleSet> sets,
                                    const SelectorParams& selector,
                                    const GeneratorParams& generator,
                                    const DivergenceError& error) {
  for (std::size_t b = 0; b < batch.size(); ++b) {
    try {
      selection_loss_grad(batch.subspan(b, 1), sets.subspan(b, 1), selector);
      generation_loss_grad(batch.subspan(b, 1), sets.subspan(b, 1), generator);
    } catch (const DivergenceError&) {
      throw DivergenceError(std::string(error.what()) + " (instance '" +
                            batch[b].id() + "')");
    }
  }
  throw error;
}

}  // namespace

std::string_view to_string(EStepMode mode) {
  return mode == EStepMode::exact ? "exact" : "sampled";
}

std::string_view to_string(StopMetric metric) {
  switch (metric) {
    case StopMetric::em: return "em";
    case StopMetric::recall_at_k: return "recall_at_k";
    case StopMetric::f1: break;
  }
  return "f1";
}

EStepMode parse_estep_mode(std::string_view text) {
  if (text == "sampled") return EStepMode::sampled;
  if (text == "exact") return EStepMode::exact;
  throw ParseError("unknown estep_mode '" + std::string(text) + "'");
}

StopMetric parse_stop_metric(std::string_view text) {
  if (text == "f1") return StopMetric::f1;
  if (text == "em") return StopMetric::em;
  if (text == "recall_at_k") return StopMetric::recall_at_k;
  throw ParseError("unknown early_stop_metric '" + std::string(text) + "'");
}

void validate(const TrainConfig& cfg) {
  if (cfg.iterations == 0) throw InvariantError("iterations must be positive");
  if (cfg.m == 0) throw InvariantError("m must be positive");
  if (cfg.k == 0) throw InvariantError("K must be positive");
  if (cfg.patience == 0) throw InvariantError("patience must be positive");
  if (cfg.batch_size == 0) throw InvariantError("batch_size must be positive");
  validate(cfg.selector_optimizer);
  validate(cfg.generator_optimizer);
}

std::string config_fingerprint(std::size_t feature_dim, std::size_t k) {
  return "dro-v1|D=" + std::to_string(feature_dim) +
         "|G=" + std::to_string(kAnswerFeatureDim) + "|K=" + std::to_string(k);
}

double metric_value(const MetricReport& report, StopMetric metric) {
  switch (metric) {
    case StopMetric::em: return report.em;
    case StopMetric::recall_at_k: return report.recall_at.at(5);
    case StopMetric::f1: break;
  }
  return report.f1;
}

MetricReport evaluate(const SelectorParams& selector,
                      const GeneratorParams& generator,
                      std::span<const Instance> dataset, const SelectionConfig& cfg,
                      int workers) {
  if (dataset.empty()) throw InvariantError("evaluate: empty dataset");
  struct Row {
    double em = 0.0, f1 = 0.0;
    Vector recall;
  };
  std::vector<Row> rows(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    const auto& instance = dataset[i];
    const auto ranking = greedy_perm(selector, instance, ranking_length(instance, cfg));
    Permutation selected{std::vector<std::size_t>(
        ranking.docids.begin(),
        ranking.docids.begin() + static_cast<std::ptrdiff_t>(cfg.k))};
    const auto pred = predict_answer(generator, instance, selected);
    Row& row = rows[i];
    row.em = exact_match(pred, instance.answer());
    row.f1 = token_f1(pred, instance.answer());
    for (const auto cutoff : kRecallCutoffs) {
      row.recall.push_back(
          recall_at_k(ranking.docids, instance, std::min(cutoff, ranking.size())));
    }
  });
  MetricReport report;
  report.count = dataset.size();
  for (const auto cutoff : kRecallCutoffs) report.recall_at[cutoff] = 0.0;
  for (const auto& row : rows) {
    report.em += row.em;
    report.f1 += row.f1;
    for (std::size_t c = 0; c < std::size(kRecallCutoffs); ++c) {
      report.recall_at[kRecallCutoffs[c]] += row.recall[c];
    }
  }
  const double scale = 1.0 / static_cast<double>(report.count);
  report.em *= scale;
  report.f1 *= scale;
  for (auto& [cutoff, value] : report.recall_at) value *= scale;
  return report;
}

TrainResult run_training(const TrainConfig& cfg, std::span<const Instance> train,
                         std::span<const Instance> validation,
                         std::optional<Checkpoint> init) {
  validate(cfg);
  if (train.empty()) throw InvariantError("run_training: empty training set");
  if (validation.empty()) throw InvariantError("run_training: empty validation set");
  const std::size_t dim = train.front().feature_dimension();
  for (const auto* split : {&train, &validation}) {
    for (const auto& instance : *split) {
      if (cfg.k > instance.pool_size()) {
        throw InvariantError("instance '" + instance.id() + "': K=" +
                             std::to_string(cfg.k) + " exceeds pool size " +
                             std::to_string(instance.pool_size()));
      }
      if (instance.feature_dimension() != dim || !instance.has_features()) {
        throw InvariantError("instance '" + instance.id() +
                             "': missing or inconsistent features");
      }
    }
  }
  const SelectionConfig sel{cfg.k};
  const auto fingerprint = config_fingerprint(dim, cfg.k);

  Checkpoint current;
  if (init) {
    if (!init->fingerprint.empty() && init->fingerprint != fingerprint) {
      throw FingerprintError("initial checkpoint fingerprint '" + init->fingerprint +
                             "' does not match '" + fingerprint + "'");
    }
    current = *init;
    if (current.selector.weights.size() != dim ||
        current.generator.weights.size() != kAnswerFeatureDim) {
      throw InvariantError("initial checkpoint has wrong parameter dimensions");
    }
  } else {
    current.selector.weights.assign(dim, 0.0);
    current.generator.weights.assign(kAnswerFeatureDim, 0.0);
  }
  current.fingerprint = fingerprint;

  const bool track = cfg.estep_mode == EStepMode::exact || cfg.track_oracle_likelihood;
  TrainResult result;
  result.initial_metrics =
      evaluate(current.selector, current.generator, validation, sel, cfg.workers);
  if (track) {
    result.initial_oracle_log_marginal = mean_log_marginal(
        current.selector, current.generator, train, sel, cfg.oracle_cap, cfg.workers);
  }
  result.best = current;
  double best_metric = metric_value(result.initial_metrics, cfg.early_stop_metric);
  std::size_t stale = 0;

  const std::size_t first = current.iteration + 1;
  for (std::size_t t = first; t < first + cfg.iterations; ++t) {
    const auto started = std::chrono::steady_clock::now();

    // E-step under theta^t.
    std::vector<WeightedSampleSet> sets(train.size());
    parallel_for(train.size(), cfg.workers, [&](std::size_t i) {
      if (cfg.estep_mode == EStepMode::exact) {
        sets[i] = exact_estep(current.selector, current.generator, train[i], sel,
                              cfg.oracle_cap);
      } else {
        Rng rng(derive_seed(cfg.seed, t, train[i].id()));
        sets[i] = estimate(current.selector, current.generator, train[i], sel, cfg.m, rng);
      }
    });

    IterationRecord record;
    record.iteration = t;
    double elbo = 0.0;
    for (const auto& set : sets) elbo += self_normalized_elbo(set);
    record.train_elbo_estimate = elbo / static_cast<double>(sets.size());
    record.mean_raw_weight = mean_raw_weight(sets);
    std::size_t total_samples = 0;
    for (const auto& set : sets) total_samples += set.m();
    record.weight_variance = total_samples >= 2 ? weight_variance(sets) : 0.0;

    // M-step: weights stay fixed at their theta^t values throughout.
    Vector selector_velocity, generator_velocity;
    for (std::size_t begin = 0; begin < train.size(); begin += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, train.size() - begin);
      const auto batch = train.subspan(begin, len);
      const auto batch_sets = std::span<const WeightedSampleSet>(sets).subspan(begin, len);
      try {
        for (std::size_t step = 0; step < cfg.selector_optimizer.inner_steps; ++step) {
          const auto g = selection_loss_grad(batch, batch_sets, current.selector);
          apply_update(current.selector.weights, g.grad, cfg.selector_optimizer,
                       selector_velocity);
        }
        for (std::size_t step = 0; step < cfg.generator_optimizer.inner_steps; ++step) {
          const auto g = generation_loss_grad(batch, batch_sets, current.generator);
          apply_update(current.generator.weights, g.grad, cfg.generator_optimizer,
                       generator_velocity);
        }
      } catch (const DivergenceError& e) {
        report_divergence(batch, batch_sets, current.selector, current.generator, e);
      }
    }
    current.iteration = t;

    record.validation =
        evaluate(current.selector, current.generator, validation, sel, cfg.workers);
    if (track) {
      record.oracle_log_marginal = mean_log_marginal(
          current.selector, current.generator, train, sel, cfg.oracle_cap, cfg.workers);
    }
    if (cfg.record_wall_time) {
      record.seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - started)
                           .count();
    }
    result.records.push_back(record);

    const double value = metric_value(record.validation, cfg.early_stop_metric);
    if (value > best_metric) {
      best_metric = value;
      result.best = current;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
  }
  result.final = current;
  return result;
}

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const json doc = {{"format", kCheckpointFormat},
                    {"version", kCheckpointVersion},
                    {"fingerprint", ckpt.fingerprint},
                    {"iteration", ckpt.iteration},
                    {"selector", ckpt.selector.weights},
                    {"generator", ckpt.generator.weights}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("write failed for checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::string_view> expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string where = "checkpoint '" + path.string() + "'";
  Checkpoint ckpt;
  try {
    const auto doc = json::parse(buffer.str());
    if (doc.at("format").get<std::string>() != kCheckpointFormat) {
      throw ParseError(where + ": not a checkpoint file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw ParseError(where + ": unsupported version " + std::to_string(version));
    }
    for (const auto& [key, value] : doc.items()) {
      static const std::vector<std::string> known = {
          "format", "version", "fingerprint", "iteration", "selector", "generator"};
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw ParseError(where + ": unknown field '" + key + "'");
      }
    }
    ckpt.fingerprint = doc.at("fingerprint").get<std::string>();
    ckpt.iteration = doc.at("iteration").get<std::size_t>();
    ckpt.selector.weights = doc.at("selector").get<Vector>();
    ckpt.generator.weights = doc.at("generator").get<Vector>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  for (const auto* w : {&ckpt.selector.weights, &ckpt.generator.weights}) {
    for (const double v : *w) {
      if (!std::isfinite(v)) throw ParseError(where + ": non-finite parameter");
    }
  }
  if (expected_fingerprint && ckpt.fingerprint != *expected_fingerprint) {
    throw FingerprintError(where + ": fingerprint '" + ckpt.fingerprint +
                           "' does not match expected '" +
                           std::string(*expected_fingerprint) + "'");
  }
  return ckpt;
}

std::string trace_csv(std::span<const IterationRecord> records) {
  std::string out =
      "iteration,elbo_estimate,em,f1,recall_1,recall_3,recall_5,mean_raw_weight,"
      "weight_variance,seconds\n";
  for (const auto& r : records) {
    out += std::to_string(r.iteration);
    for (const double v :
         {r.train_elbo_estimate, r.validation.em, r.validation.f1,
          r.validation.recall_at.at(1), r.validation.recall_at.at(3),
          r.validation.recall_at.at(5), r.mean_raw_weight, r.weight_variance,
          r.seconds}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string trace_jsonl(std::span<const IterationRecord> records) {
  std::string out;
  for (const auto& r : records) {
    json recall = json::object();
    for (const auto& [cutoff, value] : r.validation.recall_at) {
      recall[std::to_string(cutoff)] = value;
    }
    json line = {{"iteration", r.iteration},
                 {"train_elbo_estimate", r.train_elbo_estimate},
                 {"validation",
                  {{"em", r.validation.em},
                   {"f1", r.validation.f1},
                   {"recall_at", recall},
                   {"count", r.validation.count}}},
                 {"mean_raw_weight", r.mean_raw_weight},
                 {"weight_variance", r.weight_variance},
                 {"seconds", r.seconds}};
    if (r.oracle_log_marginal) line["oracle_log_marginal"] = *r.oracle_log_marginal;
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace dro
