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

#ifndef LONGFORM_COMMON_JSONL_H_
#define LONGFORM_COMMON_JSONL_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace longform {

using Json = nlohmann::json;

struct JsonLine {
  int line_number = 0;  // 1-based
  std::optional<Json> value;
  std::string parse_error;  // set when value is empty
};

// Streams a line-delimited JSON file. Blank lines are skipped. Throws IoError
// when the file cannot be opened.
void ForEachJsonLine(const std::filesystem::path& path,
                     const std::function<void(const JsonLine&)>& visit);

std::vector<Json> ReadJsonl(const std::filesystem::path& path);

void WriteJsonl(const std::filesystem::path& path,
                const std::vector<Json>& rows);

// Opens in append mode and flushes after the write.
void AppendJsonl(const std::filesystem::path& path, const Json& row);

Json ReadJsonFile(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const Json& value);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace longform

#endif  // LONGFORM_COMMON_JSONL_H_
