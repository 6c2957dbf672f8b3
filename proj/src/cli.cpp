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

#include "dro/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dro/error.hpp"
#include "dro/estep.hpp"
#include "dro/oracle.hpp"
#include "dro/random.hpp"
#include "dro/synthenv.hpp"
#include "dro/trainer.hpp"

namespace dro {

using nlohmann::json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string summary_line(const MetricReport& r) {
  return "EM=" + format_double(r.em) + " F1=" + format_double(r.f1) +
         " R@1=" + format_double(r.recall_at.at(1)) +
         " R@3=" + format_double(r.recall_at.at(3)) +
         " R@5=" + format_double(r.recall_at.at(5)) +
         " count=" + std::to_string(r.count);
}

json metrics_json(const MetricReport& r) {
  json recall = json::object();
  for (const auto& [cutoff, value] : r.recall_at) recall[std::to_string(cutoff)] = value;
  return json{{"em", r.em}, {"f1", r.f1}, {"recall_at", recall}, {"count", r.count}};
}

Checkpoint initial_checkpoint(const RunConfig& cfg) {
  Checkpoint ckpt;
  ckpt.selector = cfg.selector_init ? SelectorParams{*cfg.selector_init}
                                    : initial_selector(cfg.features.dimension);
  ckpt.generator = cfg.generator_init ? GeneratorParams{*cfg.generator_init}
                                      : initial_generator();
  ckpt.iteration = 0;
  ckpt.fingerprint = config_fingerprint(cfg.features.dimension, cfg.train.k);
  return ckpt;
}

/// Random small-pool instance plus random parameters for the oracle suite.
struct OracleCase {
  Instance instance;
  SelectorParams selector;
  GeneratorParams generator;
};

std::vector<OracleCase> oracle_cases(const RunConfig& cfg) {
  TaskSpec spec = cfg.task;
  spec.num_instances = cfg.oracle.instances;
  spec.n = cfg.oracle.n;
  spec.hops = std::clamp<std::size_t>(cfg.oracle.n >= 4 ? 2 : 1, 1, cfg.oracle.k);
  spec.dimension = cfg.features.dimension;
  spec.seed = derive_seed(cfg.task.seed, 0, "oracle-task");
  auto instances = generate_task(spec);
  std::vector<OracleCase> out;
  for (auto& instance : instances) {
    Rng rng(derive_seed(cfg.train.seed, 0, "oracle-params/" + instance.id()));
    std::normal_distribution<double> normal(0.0, 1.0);
    SelectorParams s{Vector(cfg.features.dimension)};
    for (auto& w : s.weights) w = normal(rng);
    GeneratorParams g{Vector(kAnswerFeatureDim)};
    for (auto& w : g.weights) w = normal(rng);
    out.push_back(OracleCase{std::move(instance), std::move(s), std::move(g)});
  }
  return out;
}

}  // namespace

bool OracleSuiteReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const OracleCheck& c) { return c.passed; });
}

std::string OracleSuiteReport::to_json_text() const {
  json out = json::array();
  for (const auto& c : checks) {
    out.push_back({{"name", c.name},
                   {"passed", c.passed},
                   {"measured", c.measured},
                   {"detail", c.detail}});
  }
  return json{{"all_passed", all_passed()}, {"checks", out}}.dump(2) + "\n";
}

OracleSuiteReport run_oracle_suite(const RunConfig& cfg) {
  const auto& oc = cfg.oracle;
  const std::size_t cap = cfg.train.oracle_cap;
  for (const auto& [n, k] : {std::pair{oc.n, oc.k}, std::pair{oc.em_n, oc.em_k}}) {
    if (k == 0 || k > n) {
      throw InvariantError("oracle: need 0 < K <= n (K=" + std::to_string(k) +
                           ", n=" + std::to_string(n) + ")");
    }
    if (permutation_count(n, k) > cap) {
      throw CapExceededError("oracle: pool n=" + std::to_string(n) + ", K=" +
                             std::to_string(k) + " exceeds the enumeration cap of " +
                             std::to_string(cap));
    }
  }
  const auto cases = oracle_cases(cfg);
  const SelectionConfig sel{oc.k};
  OracleSuiteReport report;

  {
    OracleCheck c{"plackett_luce_normalization", true, {}, ""};
    double worst = 0.0;
    for (const auto& oc_case : cases) {
      const auto table = exact_posterior(oc_case.selector, oc_case.generator,
                                         oc_case.instance, sel, cap);
      double total = 0.0;
      for (const double p : table.proposal_probs) total += p;
      worst = std::max(worst, std::abs(total - 1.0));
    }
    c.measured["max_abs_error"] = worst;
    c.passed = worst <= 1e-10;
    report.checks.push_back(c);
  }

  {
    OracleCheck c{"weight_normalization", true, {}, ""};
    double worst = 0.0;
    for (const auto& oc_case : cases) {
      Rng rng(derive_seed(cfg.train.seed, 1, oc_case.instance.id()));
      auto set = estimate(oc_case.selector, oc_case.generator, oc_case.instance, sel,
                          std::max<std::size_t>(cfg.train.m, 1), rng);
      if (oc.fault == "normalization") {
        for (auto& s : set.samples) s.norm_weight *= 1.05;
      }
      double total = 0.0;
      for (const auto& s : set.samples) total += s.norm_weight;
      worst = std::max(worst, std::abs(total - 1.0));
    }
    c.measured["max_abs_error"] = worst;
    c.passed = worst <= 1e-12;
    report.checks.push_back(c);
  }

  {
    OracleCheck tight{"elbo_tightness", true, {}, ""};
    OracleCheck jensen{"jensen_gap", true, {}, ""};
    double worst_tight = 0.0;
    double min_gap = std::numeric_limits<double>::infinity();
    for (const auto& oc_case : cases) {
      const auto table = exact_posterior(oc_case.selector, oc_case.generator,
                                         oc_case.instance, sel, cap);
      worst_tight = std::max(worst_tight,
                             std::abs(exact_elbo(table, table.posterior_probs).gap));
      Rng rng(derive_seed(cfg.train.seed, 2, oc_case.instance.id()));
      for (std::size_t r = 0; r < oc.random_q; ++r) {
        Vector q(table.perms.size());
        double total = 0.0;
        for (auto& v : q) {
          v = uniform01(rng) + 1e-3;
          total += v;
        }
        for (auto& v : q) v /= total;
        min_gap = std::min(min_gap, exact_elbo(table, q).gap);
      }
    }
    tight.measured["max_abs_gap"] = worst_tight;
    tight.passed = worst_tight <= 1e-10;
    jensen.measured["min_gap"] = min_gap;
    jensen.passed = min_gap >= -1e-10;
    report.checks.push_back(tight);
    report.checks.push_back(jensen);
  }

  {
    OracleCheck ones{"unbiasedness_f_one", true, {}, ""};
    OracleCheck logp{"unbiasedness_f_selector_log_prob", true, {}, ""};
    std::size_t pass_ones = 0, pass_logp = 0;
    double worst_z_ones = 0.0, worst_z_logp = 0.0;
    for (const auto& oc_case : cases) {
      const auto table = exact_posterior(oc_case.selector, oc_case.generator,
                                         oc_case.instance, sel, cap);
      double exact_ones = 0.0, exact_logp = 0.0;
      for (std::size_t i = 0; i < table.perms.size(); ++i) {
        exact_ones += table.joint_probs[i];
        exact_logp += table.joint_probs[i] * std::log(table.proposal_probs[i]);
      }
      Rng rng(derive_seed(cfg.train.seed, 3, oc_case.instance.id()));
      const auto set = estimate(oc_case.selector, oc_case.generator, oc_case.instance,
                                sel, oc.mc_samples, rng);
      auto z_score = [&](auto value_of, double exact) {
        double sum = 0.0, sq = 0.0;
        for (const auto& s : set.samples) {
          const double v = value_of(s);
          sum += v;
          sq += v * v;
        }
        const double m = static_cast<double>(set.m());
        const double mean = sum / m;
        const double var = std::max(0.0, (sq - m * mean * mean) / (m - 1.0));
        const double se = std::sqrt(var / m);
        return se > 0.0 ? std::abs(mean - exact) / se
                        : (std::abs(mean - exact) <= 1e-12 ? 0.0 : INFINITY);
      };
      const double z1 = z_score([](const WeightedSample& s) { return s.raw_weight; },
                                exact_ones);
      const double z2 = z_score(
          [](const WeightedSample& s) { return s.raw_weight * s.selector_log_prob; },
          exact_logp);
      pass_ones += z1 <= 3.0;
      pass_logp += z2 <= 3.0;
      worst_z_ones = std::max(worst_z_ones, z1);
      worst_z_logp = std::max(worst_z_logp, z2);
    }
    const auto needed = static_cast<std::size_t>(
        std::ceil(0.95 * static_cast<double>(cases.size())));
    ones.measured["passes"] = static_cast<double>(pass_ones);
    ones.measured["required"] = static_cast<double>(needed);
    ones.measured["max_z"] = worst_z_ones;
    ones.passed = pass_ones >= needed;
    logp.measured["passes"] = static_cast<double>(pass_logp);
    logp.measured["required"] = static_cast<double>(needed);
    logp.measured["max_z"] = worst_z_logp;
    logp.passed = pass_logp >= needed;
    report.checks.push_back(ones);
    report.checks.push_back(logp);
  }

  {
    OracleCheck identity{"variance_identity_exact_ratio", true, {}, ""};
    OracleCheck likelihood_form{"variance_likelihood_form_nonpositive", true, {}, ""};
    OracleCheck mean{"exact_ratio_expectation", true, {}, ""};
    double worst_identity = 0.0, max_likelihood_form = -INFINITY, worst_mean = 0.0;
    for (const auto& oc_case : cases) {
      const auto table = exact_posterior(oc_case.selector, oc_case.generator,
                                         oc_case.instance, sel, cap);
      const auto& inst = oc_case.instance;
      const auto& selector = oc_case.selector;
      const auto& generator = oc_case.generator;
      const auto r = variance_report(table, [&](const Permutation& z) {
        return perm_log_prob(selector, inst, z) +
               answer_log_prob(generator, inst, z, inst.gold_index());
      });
      worst_identity = std::max(worst_identity, std::abs(r.delta_var_exact - r.ratio_identity));
      max_likelihood_form = std::max(max_likelihood_form, r.delta_var_likelihood_form);
      worst_mean = std::max(worst_mean, std::abs(r.weighted_mean_proposal - r.mean_posterior));
    }
    identity.measured["max_abs_error"] = worst_identity;
    identity.passed = worst_identity <= 1e-10;
    likelihood_form.measured["max_value"] = max_likelihood_form;
    likelihood_form.passed = max_likelihood_form <= 1e-12;
    mean.measured["max_abs_error"] = worst_mean;
    mean.passed = worst_mean <= 1e-10;
    report.checks.push_back(identity);
    report.checks.push_back(likelihood_form);
    report.checks.push_back(mean);
  }

  {
    OracleCheck c{"exact_em_monotonicity", true, {}, ""};
    TaskSpec spec = cfg.task;
    spec.num_instances = oc.em_instances;
    spec.n = oc.em_n;
    spec.hops = std::clamp<std::size_t>(oc.em_n >= 4 ? 2 : 1, 1, oc.em_k);
    spec.dimension = cfg.features.dimension;
    spec.seed = derive_seed(cfg.task.seed, 0, "oracle-em-task");
    const auto data = generate_task(spec);
    TrainConfig tc = cfg.train;
    tc.k = oc.em_k;
    tc.estep_mode = EStepMode::exact;
    tc.iterations = oc.em_iterations;
    tc.patience = oc.em_iterations;
    tc.batch_size = data.size();
    for (auto* opt : {&tc.selector_optimizer, &tc.generator_optimizer}) {
      opt->learning_rate = oc.em_learning_rate;
      opt->weight_decay = 0.0;
      opt->momentum = 0.0;
      opt->inner_steps = oc.em_inner_steps;
    }
    RunConfig shaped = cfg;
    shaped.train.k = oc.em_k;
    const auto result = run_training(tc, data, data, initial_checkpoint(shaped));
    std::vector<double> trace{*result.initial_oracle_log_marginal};
    for (const auto& rec : result.records) trace.push_back(*rec.oracle_log_marginal);
    double worst_drop = 0.0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
      worst_drop = std::max(worst_drop, trace[i - 1] - trace[i]);
    }
    c.measured["initial_log_marginal"] = trace.front();
    c.measured["final_log_marginal"] = trace.back();
    c.measured["max_decrease"] = worst_drop;
    c.passed = worst_drop <= 1e-9;
    report.checks.push_back(c);
  }
  return report;
}

int cmd_gen(const RunConfig& cfg) {
  validate(cfg);
  const auto instances = generate_task(cfg.task);
  const auto validation_count = static_cast<std::size_t>(
      std::llround(cfg.validation_fraction * static_cast<double>(instances.size())));
  const std::size_t train_count = instances.size() - validation_count;
  const std::span<const Instance> all(instances);
  std::filesystem::create_directories(cfg.paths.out_dir);
  write_text(cfg.train_path(), serialize_dataset(all.first(train_count)));
  write_text(cfg.validation_path(), serialize_dataset(all.subspan(train_count)));
  write_text(cfg.paths.out_dir / "manifest.json", to_json_text(cfg));
  spdlog::info("gen: wrote {} train and {} validation instances to {}", train_count,
               validation_count, cfg.paths.out_dir.string());
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  validate(cfg);
  const auto train = load_dataset(cfg.train_path(), cfg.features);
  const auto validation = load_dataset(cfg.validation_path(), cfg.features);
  const auto fingerprint = config_fingerprint(cfg.features.dimension, cfg.train.k);
  const Checkpoint init = cfg.paths.init_checkpoint.empty()
                              ? initial_checkpoint(cfg)
                              : load_checkpoint(cfg.paths.init_checkpoint, fingerprint);
  std::filesystem::create_directories(cfg.paths.out_dir);
  save_checkpoint(init, cfg.paths.out_dir / "init.ckpt.json");

  const auto result = run_training(cfg.train, train, validation, init);
  for (const auto& r : result.records) {
    spdlog::info("iteration {}: elbo={} {} mean_w={} var_w={}", r.iteration,
                 format_double(r.train_elbo_estimate), summary_line(r.validation),
                 format_double(r.mean_raw_weight), format_double(r.weight_variance));
  }
  if (result.early_stopped) spdlog::info("early stop after {} iterations", result.records.size());
  save_checkpoint(result.best, cfg.paths.out_dir / "best.ckpt.json");
  save_checkpoint(result.final, cfg.paths.out_dir / "final.ckpt.json");
  write_text(cfg.paths.out_dir / "trace.jsonl", trace_jsonl(result.records));
  write_text(cfg.paths.out_dir / "trace.csv", trace_csv(result.records));
  MetricReport best = result.initial_metrics;
  for (const auto& r : result.records) {
    if (r.iteration == result.best.iteration) best = r.validation;
  }
  std::cout << "train: " << result.records.size() << " iterations, best at iteration "
            << result.best.iteration << ": " << summary_line(best) << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  validate(cfg);
  const auto fingerprint = config_fingerprint(cfg.features.dimension, cfg.train.k);
  const auto ckpt = load_checkpoint(cfg.checkpoint_path(), fingerprint);
  const auto dataset = load_dataset(cfg.dataset_path(), cfg.features);
  const auto report = evaluate(ckpt.selector, ckpt.generator, dataset,
                               SelectionConfig{cfg.train.k}, cfg.train.workers);
  json doc = metrics_json(report);
  doc["checkpoint"] = cfg.checkpoint_path().string();
  doc["dataset"] = cfg.dataset_path().string();
  write_text(cfg.report_path(), doc.dump(2) + "\n");
  std::cout << summary_line(report) << "\n";
  return 0;
}

int cmd_oracle(const RunConfig& cfg) {
  validate(cfg);
  const auto report = run_oracle_suite(cfg);
  write_text(cfg.paths.out_dir / "oracle_report.json", report.to_json_text());
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
    for (const auto& [key, value] : c.measured) {
      std::cout << ' ' << key << '=' << format_double(value);
    }
    std::cout << "\n";
  }
  if (!report.all_passed()) {
    for (const auto& c : report.checks) {
      if (!c.passed) spdlog::error("oracle check failed: {}", c.name);
    }
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  auto logger = spdlog::get("dro");
  if (!logger) logger = spdlog::stderr_color_mt("dro");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  if (const char* level = std::getenv("DRO_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }

  CLI::App app{"Joint selector/generator training by importance-sampled EM"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  int workers = 0;
  std::string fault;
  bool list_keys = false;
  app.add_option("-c,--config", config_path, "JSON config file");
  app.add_option("-s,--set", overrides, "override a config key: key=value")
      ->take_all();
  app.add_option("-j,--workers", workers, "worker threads (overrides train.workers)");
  app.add_flag("--list-keys", list_keys, "print every config key and exit");

  auto* gen = app.add_subcommand("gen", "generate a synthetic train/validation split");
  auto* train = app.add_subcommand("train", "run EM training");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  auto* oracle = app.add_subcommand("oracle", "run the exact-enumeration validation suite");
  oracle->add_option("--inject-fault", fault, "test hook: normalization");
  for (auto* sub : {gen, train, eval, oracle}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (list_keys) {
      for (const auto& key : config_keys()) std::cout << key.name << "  " << key.doc << "\n";
      return 0;
    }
    RunConfig cfg = config_path.empty() ? default_run_config() : load_run_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (workers > 0) cfg.train.workers = workers;
    if (!fault.empty()) cfg.oracle.fault = fault;
    if (gen->parsed()) return cmd_gen(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_eval(cfg);
    return cmd_oracle(cfg);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
}

}  // namespace dro
