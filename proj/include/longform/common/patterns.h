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

// Markdown structure patterns. Matching runs on Boost.Regex in Perl mode,
// where ^ anchors at every line start and matching is non-recursive, so long
// responses cannot exhaust the stack.

#ifndef LONGFORM_COMMON_PATTERNS_H_
#define LONGFORM_COMMON_PATTERNS_H_

#include <array>
#include <string_view>

namespace longform {

struct MarkdownPattern {
  std::string_view name;
  std::string_view regex;
};

inline constexpr std::array<MarkdownPattern, 7> kMarkdownPatterns = {{
    {"atx_heading", R"(^#{1,6}\s)"},
    {"unordered_list", R"(^[-*+]\s)"},
    {"ordered_list", R"(^\d+\.\s)"},
    {"blockquote", R"(^>\s)"},
    {"fenced_code", R"(```[\s\S]+?```)"},
    {"inline_code", R"(`[^`\n]+?`)"},
    {"pipe_table", R"(\|.+\|)"},
}};

// True when the text contains a fenced code block.
bool ContainsFencedCode(std::string_view text);

// One flag per entry of kMarkdownPatterns, in table order.
std::array<bool, kMarkdownPatterns.size()> MatchMarkdownPatterns(
    std::string_view text);

}  // namespace longform

#endif  // LONGFORM_COMMON_PATTERNS_H_
