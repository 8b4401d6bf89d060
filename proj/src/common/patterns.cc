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

#include "longform/common/patterns.h"

#include <string>
#include <vector>

#include <boost/regex.hpp>

namespace longform {
namespace {

// no_mod_s keeps '.' from crossing newlines; ^ stays line-anchored.
constexpr auto kSyntax = boost::regex::perl | boost::regex::no_mod_s;

const std::vector<boost::regex>& CompiledPatterns() {
  static const std::vector<boost::regex> compiled = [] {
    std::vector<boost::regex> out;
    for (const MarkdownPattern& p : kMarkdownPatterns) {
      out.emplace_back(std::string(p.regex), kSyntax);
    }
    return out;
  }();
  return compiled;
}

constexpr size_t kFencedIndex = 4;

}  // namespace

bool ContainsFencedCode(std::string_view text) {
  return boost::regex_search(text.begin(), text.end(),
                             CompiledPatterns()[kFencedIndex]);
}

std::array<bool, kMarkdownPatterns.size()> MatchMarkdownPatterns(
    std::string_view text) {
  std::array<bool, kMarkdownPatterns.size()> hits{};
  const auto& compiled = CompiledPatterns();
  for (size_t i = 0; i < compiled.size(); ++i) {
    hits[i] = boost::regex_search(text.begin(), text.end(), compiled[i]);
  }
  return hits;
}

}  // namespace longform
