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

#include <stdexcept>
#include <string>

namespace dro {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (dataset, config, checkpoint).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A domain invariant does not hold (duplicate doc ids, bad permutation, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed the configured permutation cap.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

/// A checkpoint was produced under an incompatible configuration.
class FingerprintError : public Error {
 public:
  using Error::Error;
};

/// Optimization produced a non-finite loss or gradient.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace dro
