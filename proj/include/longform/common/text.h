// Copyright 2026 The Longform RL Authors.
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

#ifndef LONGFORM_COMMON_TEXT_H_
#define LONGFORM_COMMON_TEXT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace longform {

// A word is a maximal run of non-whitespace characters. Every word count in
// the project goes through these two functions.
std::vector<std::string_view> SplitWords(std::string_view text);
int WordCount(std::string_view text);

std::string_view Trim(std::string_view text);
std::string ToLower(std::string_view text);

// Lowercases, splits on whitespace and emits every ASCII punctuation
// character as its own token: "Hi, you!" -> {"hi", ",", "you", "!"}.
std::vector<std::string> NormalizedTokens(std::string_view text);

// Replaces every occurrence of `needle` in `haystack` exactly once, scanning
// left to right over the original text only.
std::string ReplaceAll(std::string_view haystack, std::string_view needle,
                       std::string_view replacement);

// Stable 64-bit FNV-1a; std::hash is not portable across standard libraries.
uint64_t Fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace longform

#endif  // LONGFORM_COMMON_TEXT_H_
