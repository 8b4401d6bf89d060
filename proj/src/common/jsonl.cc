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

#include "longform/common/jsonl.h"

#include <fstream>
#include <sstream>

#include "longform/common/error.h"
#include "longform/common/text.h"

namespace longform {

void ForEachJsonLine(const std::filesystem::path& path,
                     const std::function<void(const JsonLine&)>& visit) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (Trim(line).empty()) continue;
    JsonLine entry;
    entry.line_number = line_number;
    try {
      entry.value = Json::parse(line);
    } catch (const Json::parse_error& e) {
      entry.parse_error = e.what();
    }
    visit(entry);
  }
}

std::vector<Json> ReadJsonl(const std::filesystem::path& path) {
  std::vector<Json> rows;
  ForEachJsonLine(path, [&](const JsonLine& line) {
    if (!line.value) {
      throw IoError(path.string() + ":" + std::to_string(line.line_number) +
                    ": " + line.parse_error);
    }
    rows.push_back(*line.value);
  });
  return rows;
}

void WriteJsonl(const std::filesystem::path& path,
                const std::vector<Json>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const Json& row : rows) out << row.dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void AppendJsonl(const std::filesystem::path& path, const Json& row) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  out << row.dump() << '\n';
  out.flush();
  if (!out) throw IoError("append failed for " + path.string());
}

Json ReadJsonFile(const std::filesystem::path& path) {
  const std::string text = ReadTextFile(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const Json& value) {
  WriteTextFile(path, value.dump(2) + "\n");
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace longform
