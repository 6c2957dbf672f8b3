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

#include <map>
#include <string>
#include <vector>

#include "dro/run_config.hpp"

namespace dro {

struct OracleCheck {
  std::string name;
  bool passed = false;
  std::map<std::string, double> measured;
  std::string detail;
};

struct OracleSuiteReport {
  std::vector<OracleCheck> checks;

  bool all_passed() const;
  std::string to_json_text() const;
};

/// Runs the exact-enumeration validation suite described by cfg.oracle.
/// Throws CapExceededError before doing any work if a pool is too large.
OracleSuiteReport run_oracle_suite(const RunConfig& cfg);

/// Subcommands. Each returns a process exit code and throws dro::Error on
/// invalid input.
int cmd_gen(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_oracle(const RunConfig& cfg);

/// Full command-line entry point: `dro <gen|train|eval|oracle> [options]`.
int run_cli(int argc, char** argv);

}  // namespace dro
