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

#include "dro/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "dro/error.hpp"

namespace dro {

using nlohmann::json;

namespace {

struct Field {
  std::string name;
  std::string doc;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

template <class T, class Member>
Field field(std::string name, std::string doc, Member member) {
  return Field{std::move(name), std::move(doc),
               [member](RunConfig& c, const json& v) { member(c) = v.get<T>(); },
               [member](const RunConfig& c) {
                 return json(member(const_cast<RunConfig&>(c)));
               }};
}

Field path_field(std::string name, std::string doc,
                 std::filesystem::path& (*member)(RunConfig&)) {
  return Field{std::move(name), std::move(doc),
               [member](RunConfig& c, const json& v) { member(c) = v.get<std::string>(); },
               [member](const RunConfig& c) {
                 return json(member(const_cast<RunConfig&>(c)).string());
               }};
}

std::vector<Field> build_fields() {
  std::vector<Field> f;
  auto add = [&](Field x) { f.push_back(std::move(x)); };

  add(field<std::size_t>("task.num_instances", "instances generated by `gen`",
                         [](RunConfig& c) -> auto& { return c.task.num_instances; }));
  add(field<std::size_t>("task.n", "candidate pool size per instance",
                         [](RunConfig& c) -> auto& { return c.task.n; }));
  add(field<std::size_t>("task.hops", "evidence chain length, 1..3",
                         [](RunConfig& c) -> auto& { return c.task.hops; }));
  add(field<std::size_t>("task.num_distractor_answers", "wrong answers per instance",
                         [](RunConfig& c) -> auto& { return c.task.num_distractor_answers; }));
  add(field<std::size_t>("task.num_absent_answers", "answer candidates found in no document",
                         [](RunConfig& c) -> auto& { return c.task.num_absent_answers; }));
  add(field<std::size_t>("task.vocab_size", "synthetic vocabulary size",
                         [](RunConfig& c) -> auto& { return c.task.vocab_size; }));
  add(field<double>("task.feature_noise", "std-dev of Gaussian feature noise",
                    [](RunConfig& c) -> auto& { return c.task.feature_noise; }));
  add(field<std::uint64_t>("task.seed", "task generation seed",
                           [](RunConfig& c) -> auto& { return c.task.seed; }));
  add(field<double>("task.validation_fraction", "share of instances held out for validation",
                    [](RunConfig& c) -> auto& { return c.validation_fraction; }));

  add(field<std::size_t>("features.dimension", "selector feature dimension D",
                         [](RunConfig& c) -> auto& { return c.features.dimension; }));
  add(Field{"features.mode", "provided | lexical",
            [](RunConfig& c, const json& v) {
              c.features.mode = parse_feature_mode(v.get<std::string>());
            },
            [](const RunConfig& c) { return json(std::string(to_string(c.features.mode))); }});

  add(field<std::size_t>("train.iterations", "maximum EM iterations N",
                         [](RunConfig& c) -> auto& { return c.train.iterations; }));
  add(field<std::size_t>("train.m", "permutations sampled per query",
                         [](RunConfig& c) -> auto& { return c.train.m; }));
  add(field<std::size_t>("train.k", "permutation length K",
                         [](RunConfig& c) -> auto& { return c.train.k; }));
  add(Field{"train.estep_mode", "sampled | exact",
            [](RunConfig& c, const json& v) {
              c.train.estep_mode = parse_estep_mode(v.get<std::string>());
            },
            [](const RunConfig& c) { return json(std::string(to_string(c.train.estep_mode))); }});
  add(Field{"train.early_stop_metric", "f1 | em | recall_at_k (Recall@5)",
            [](RunConfig& c, const json& v) {
              c.train.early_stop_metric = parse_stop_metric(v.get<std::string>());
            },
            [](const RunConfig& c) {
              return json(std::string(to_string(c.train.early_stop_metric)));
            }});
  add(field<std::size_t>("train.patience", "iterations without improvement before stopping",
                         [](RunConfig& c) -> auto& { return c.train.patience; }));
  add(field<std::uint64_t>("train.seed", "sampling seed",
                           [](RunConfig& c) -> auto& { return c.train.seed; }));
  add(field<std::size_t>("train.batch_size", "instances per M-step gradient batch",
                         [](RunConfig& c) -> auto& { return c.train.batch_size; }));
  add(field<int>("train.workers", "threads for E-step and evaluation",
                 [](RunConfig& c) -> auto& { return c.train.workers; }));
  add(field<std::size_t>("train.oracle_cap", "maximum permutations enumerated per pool",
                         [](RunConfig& c) -> auto& { return c.train.oracle_cap; }));
  add(field<bool>("train.track_oracle_likelihood", "log exact log-likelihood in sampled mode",
                  [](RunConfig& c) -> auto& { return c.train.track_oracle_likelihood; }));
  add(field<bool>("train.record_wall_time", "write wall time into traces (false: 0)",
                  [](RunConfig& c) -> auto& { return c.train.record_wall_time; }));

  for (const std::string which : {"selector", "generator"}) {
    auto opt = which == "selector"
                   ? +[](RunConfig& c) -> OptimizerConfig& { return c.train.selector_optimizer; }
                   : +[](RunConfig& c) -> OptimizerConfig& { return c.train.generator_optimizer; };
    const std::string p = "train." + which + ".";
    add(Field{p + "learning_rate", which + " SGD step size",
              [opt](RunConfig& c, const json& v) { opt(c).learning_rate = v.get<double>(); },
              [opt](const RunConfig& c) {
                return json(opt(const_cast<RunConfig&>(c)).learning_rate);
              }});
    add(Field{p + "weight_decay", which + " decoupled weight decay",
              [opt](RunConfig& c, const json& v) { opt(c).weight_decay = v.get<double>(); },
              [opt](const RunConfig& c) {
                return json(opt(const_cast<RunConfig&>(c)).weight_decay);
              }});
    add(Field{p + "momentum", which + " momentum in [0, 1)",
              [opt](RunConfig& c, const json& v) { opt(c).momentum = v.get<double>(); },
              [opt](const RunConfig& c) {
                return json(opt(const_cast<RunConfig&>(c)).momentum);
              }});
    add(Field{p + "inner_steps", which + " gradient steps per batch per M-step",
              [opt](RunConfig& c, const json& v) { opt(c).inner_steps = v.get<std::size_t>(); },
              [opt](const RunConfig& c) {
                return json(opt(const_cast<RunConfig&>(c)).inner_steps);
              }});
  }

  add(Field{"train.selector_init", "initial selector weights (null: lexical prior)",
            [](RunConfig& c, const json& v) {
              if (v.is_null()) c.selector_init.reset();
              else c.selector_init = v.get<Vector>();
            },
            [](const RunConfig& c) { return c.selector_init ? json(*c.selector_init) : json(); }});
  add(Field{"train.generator_init", "initial generator weights (null: built-in prior)",
            [](RunConfig& c, const json& v) {
              if (v.is_null()) c.generator_init.reset();
              else c.generator_init = v.get<Vector>();
            },
            [](const RunConfig& c) { return c.generator_init ? json(*c.generator_init) : json(); }});

  add(field<std::size_t>("oracle.instances", "random instances per oracle check",
                         [](RunConfig& c) -> auto& { return c.oracle.instances; }));
  add(field<std::size_t>("oracle.n", "pool size for oracle checks",
                         [](RunConfig& c) -> auto& { return c.oracle.n; }));
  add(field<std::size_t>("oracle.k", "permutation length for oracle checks",
                         [](RunConfig& c) -> auto& { return c.oracle.k; }));
  add(field<std::size_t>("oracle.mc_samples", "Monte Carlo draws for the unbiasedness check",
                         [](RunConfig& c) -> auto& { return c.oracle.mc_samples; }));
  add(field<std::size_t>("oracle.random_q", "random variational tables per instance",
                         [](RunConfig& c) -> auto& { return c.oracle.random_q; }));
  add(field<std::size_t>("oracle.em_instances", "instances in the exact-EM check",
                         [](RunConfig& c) -> auto& { return c.oracle.em_instances; }));
  add(field<std::size_t>("oracle.em_n", "pool size in the exact-EM check",
                         [](RunConfig& c) -> auto& { return c.oracle.em_n; }));
  add(field<std::size_t>("oracle.em_k", "permutation length in the exact-EM check",
                         [](RunConfig& c) -> auto& { return c.oracle.em_k; }));
  add(field<std::size_t>("oracle.em_iterations", "EM iterations in the exact-EM check",
                         [](RunConfig& c) -> auto& { return c.oracle.em_iterations; }));
  add(field<std::size_t>("oracle.em_inner_steps", "gradient steps per M-step in exact EM",
                         [](RunConfig& c) -> auto& { return c.oracle.em_inner_steps; }));
  add(field<double>("oracle.em_learning_rate", "step size in exact EM",
                    [](RunConfig& c) -> auto& { return c.oracle.em_learning_rate; }));
  add(field<std::string>("oracle.fault", "test hook: none | normalization",
                         [](RunConfig& c) -> auto& { return c.oracle.fault; }));

  add(path_field("paths.out_dir", "output directory",
                 +[](RunConfig& c) -> std::filesystem::path& { return c.paths.out_dir; }));
  add(path_field("paths.train", "training set (default <out_dir>/train.jsonl)",
                 +[](RunConfig& c) -> std::filesystem::path& { return c.paths.train; }));
  add(path_field("paths.validation", "validation set (default <out_dir>/validation.jsonl)",
                 +[](RunConfig& c) -> std::filesystem::path& { return c.paths.validation; }));
  add(path_field("paths.checkpoint", "checkpoint for eval (default <out_dir>/best.ckpt.json)",
                 +[](RunConfig& c) -> std::filesystem::path& { return c.paths.checkpoint; }));
  add(path_field("paths.dataset", "dataset for eval (default: validation set)",
                 +[](RunConfig& c) -> std::filesystem::path& { return c.paths.dataset; }));
  add(path_field("paths.init_checkpoint", "optional checkpoint to resume training from",
                 +[](RunConfig& c) -> std::filesystem::path& { return c.paths.init_checkpoint; }));
  add(path_field("paths.report", "eval report (default <out_dir>/eval_report.json)",
                 +[](RunConfig& c) -> std::filesystem::path& { return c.paths.report; }));
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = build_fields();
  return all;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.name == key) return f;
  }
  throw ParseError("unknown config key '" + std::string(key) + "'");
}

void assign(RunConfig& cfg, std::string_view key, const json& value) {
  const auto& f = find_field(key);
  try {
    f.set(cfg, value);
  } catch (const json::exception& e) {
    throw ParseError("config key '" + std::string(key) + "': " + e.what());
  }
}

void apply_tree(RunConfig& cfg, const json& node, const std::string& prefix) {
  for (const auto& [key, value] : node.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      apply_tree(cfg, value, name);
    } else {
      assign(cfg, name, value);
    }
  }
}

}  // namespace

std::filesystem::path RunConfig::train_path() const {
  return paths.train.empty() ? paths.out_dir / "train.jsonl" : paths.train;
}
std::filesystem::path RunConfig::validation_path() const {
  return paths.validation.empty() ? paths.out_dir / "validation.jsonl" : paths.validation;
}
std::filesystem::path RunConfig::checkpoint_path() const {
  return paths.checkpoint.empty() ? paths.out_dir / "best.ckpt.json" : paths.checkpoint;
}
std::filesystem::path RunConfig::dataset_path() const {
  return paths.dataset.empty() ? validation_path() : paths.dataset;
}

std::filesystem::path RunConfig::report_path() const {
  return paths.report.empty() ? paths.out_dir / "eval_report.json" : paths.report;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& f : fields()) out.push_back({f.name, f.doc});
    return out;
  }();
  return keys;
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.task.dimension = cfg.features.dimension;
  return cfg;
}

RunConfig parse_run_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config: top level must be an object");
  RunConfig cfg = default_run_config();
  apply_tree(cfg, doc, "");
  cfg.task.dimension = cfg.features.dimension;
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view json_value) {
  json value;
  try {
    value = json::parse(json_value);
  } catch (const json::parse_error&) {
    value = std::string(json_value);
  }
  assign(cfg, key, value);
  cfg.task.dimension = cfg.features.dimension;
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ParseError("override '" + std::string(assignment) + "' is not key=value");
  }
  set_config_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string to_json_text(const RunConfig& cfg) {
  json doc = json::object();
  for (const auto& f : fields()) {
    doc[json::json_pointer("/" + [&] {
      std::string p = f.name;
      std::replace(p.begin(), p.end(), '.', '/');
      return p;
    }())] = f.get(cfg);
  }
  return doc.dump(2) + "\n";
}

void validate(const RunConfig& cfg) {
  validate(cfg.task);
  validate(cfg.train);
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    throw InvariantError("task.validation_fraction must lie in (0, 1)");
  }
  if (cfg.selector_init && cfg.selector_init->size() != cfg.features.dimension) {
    throw InvariantError("train.selector_init must have features.dimension entries");
  }
  if (cfg.generator_init && cfg.generator_init->size() != kAnswerFeatureDim) {
    throw InvariantError("train.generator_init must have " +
                         std::to_string(kAnswerFeatureDim) + " entries");
  }
  if (cfg.oracle.fault != "none" && cfg.oracle.fault != "normalization") {
    throw InvariantError("oracle.fault must be none or normalization");
  }
}

}  // namespace dro
