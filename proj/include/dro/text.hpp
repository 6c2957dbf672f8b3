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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dro {

/// Lowercases and splits on runs of non-alphanumeric ASCII characters.
/// Shared by lexical featurization and the answer metrics.
std::vector<std::string> tokenize(std::string_view text);

/// True iff `needle` occurs as a contiguous run inside `haystack`.
/// An empty needle is never contained.
bool contains_subsequence(const std::vector<std::string>& haystack,
                          const std::vector<std::string>& needle);

/// 64-bit FNV-1a, used for feature hashing and seed derivation.
std::uint64_t fnv1a(std::string_view text);

}  // namespace dro
