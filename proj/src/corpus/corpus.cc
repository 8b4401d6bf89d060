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

#include "longform/corpus/corpus.h"

#include <algorithm>
#include <set>

#include "longform/common/error.h"
#include "longform/common/patterns.h"
#include "longform/common/rng.h"
#include "longform/common/stats.h"
#include "longform/common/text.h"

namespace longform::corpus {
namespace {

// Returns the first present string field among `keys`.
std::optional<std::string> FirstStringField(
    const Json& row, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    auto it = row.find(key);
    if (it != row.end() && it->is_string()) return it->get<std::string>();
  }
  return std::nullopt;
}

}  // namespace

std::string_view SourceName(Source source) {
  switch (source) {
    case Source::kEli5:
      return "eli5";
    case Source::kAlpaca:
      return "alpaca";
    case Source::kLongform:
      return "longform";
    case Source::kCustom:
      return "custom";
  }
  return "custom";
}

std::optional<Source> ParseSource(std::string_view name) {
  for (Source s :
       {Source::kEli5, Source::kAlpaca, Source::kLongform, Source::kCustom}) {
    if (SourceName(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view SplitName(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Json ToJson(const PromptRecord& record) {
  return Json{{"id", record.id},
              {"source", SourceName(record.source)},
              {"instruction", record.instruction},
              {"reference", record.reference},
              {"split", SplitName(record.split)}};
}

PromptRecord PromptRecordFromJson(const Json& row) {
  PromptRecord record;
  record.id = row.at("id").get<std::string>();
  const auto source = ParseSource(row.at("source").get<std::string>());
  if (!source) throw ValidationError("source", "unknown source");
  record.source = *source;
  record.instruction = row.at("instruction").get<std::string>();
  record.reference = row.at("reference").get<std::string>();
  const std::string split = row.value("split", "train");
  if (split != "train" && split != "test") {
    throw ValidationError("split", "must be train or test");
  }
  record.split = split == "train" ? Split::kTrain : Split::kTest;
  return record;
}

CorpusStats ComputeStats(const std::vector<PromptRecord>& records) {
  CorpusStats stats;
  stats.count = static_cast<int64_t>(records.size());
  double words = 0.0;
  for (const PromptRecord& r : records) {
    words += WordCount(r.reference);
    ++stats.per_source_counts[r.source];
  }
  stats.mean_ref_words = records.empty() ? 0.0 : words / records.size();
  return stats;
}

Json ToJson(const CorpusStats& stats) {
  Json per_source = Json::object();
  for (const auto& [source, n] : stats.per_source_counts) {
    per_source[std::string(SourceName(source))] = n;
  }
  return Json{{"count", stats.count},
              {"mean_ref_words", stats.mean_ref_words},
              {"per_source_counts", per_source}};
}

LoadResult LoadCorpus(const std::filesystem::path& path, Source source) {
  LoadResult result;
  std::set<std::string> seen_ids;
  int lines = 0;
  ForEachJsonLine(path, [&](const JsonLine& line) {
    ++lines;
    auto fail = [&](std::string message) {
      result.errors.push_back({line.line_number, std::move(message)});
    };
    if (!line.value) return fail("invalid JSON: " + line.parse_error);
    const Json& row = *line.value;
    if (!row.is_object()) return fail("line is not a JSON object");

    const auto instruction = FirstStringField(row, {"instruction", "question"});
    const auto reference =
        FirstStringField(row, {"reference", "output", "answer"});
    if (!instruction || Trim(*instruction).empty()) {
      return fail("missing or empty instruction/question");
    }
    if (!reference || Trim(*reference).empty()) {
      return fail("missing or empty reference/output/answer");
    }

    PromptRecord record;
    record.source = source;
    record.instruction = *instruction;
    record.reference = *reference;
    if (auto it = row.find("id"); it != row.end() && !it->is_null()) {
      record.id = it->is_string() ? it->get<std::string>() : it->dump();
    } else {
      record.id = std::string(SourceName(source)) + "-" +
                  std::to_string(line.line_number - 1);
    }
    if (auto split = FirstStringField(row, {"split"})) {
      if (*split == "test") {
        record.split = Split::kTest;
      } else if (*split != "train") {
        return fail("split must be train or test");
      }
    }
    if (!seen_ids.insert(record.id).second) {
      return fail("duplicate id " + record.id);
    }
    result.records.push_back(std::move(record));
  });
  // A lone bad line never aborts, so tiny files are judged per record.
  if (result.errors.size() > 1 && static_cast<double>(result.errors.size()) >
                                      kMaxMalformedFraction * lines) {
    throw ValidationError(path.string() + ": " +
                          std::to_string(result.errors.size()) + " of " +
                          std::to_string(lines) +
                          " lines malformed (limit 10%); first at line " +
                          std::to_string(result.errors.front().line_number) +
                          ": " + result.errors.front().message);
  }
  return result;
}

std::vector<PromptRecord> FilterCorpus(const std::vector<PromptRecord>& records,
                                       int min_ref_words, bool exclude_code) {
  if (min_ref_words < 0) {
    throw ValidationError("min_ref_words", "must be >= 0");
  }
  std::vector<PromptRecord> kept;
  for (const PromptRecord& r : records) {
    if (WordCount(r.reference) < min_ref_words) continue;
    if (exclude_code &&
        (ContainsFencedCode(r.instruction) || ContainsFencedCode(r.reference))) {
      continue;
    }
    kept.push_back(r);
  }
  return kept;
}

CorpusSplit SplitCorpus(const std::vector<PromptRecord>& records,
                        double test_fraction, uint64_t seed) {
  if (records.size() < 2) {
    throw ValidationError("cannot split fewer than 2 records");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction", "must lie in (0, 1)");
  }
  const IndexSplit indices = SplitIndices(records.size(), test_fraction, seed);
  CorpusSplit split;
  for (size_t i : indices.train) {
    split.train.push_back(records[i]);
    split.train.back().split = Split::kTrain;
  }
  for (size_t i : indices.test) {
    split.test.push_back(records[i]);
    split.test.back().split = Split::kTest;
  }
  return split;
}

std::vector<PromptRecord> SampleRecords(const std::vector<PromptRecord>& records,
                                        size_t n, uint64_t seed) {
  if (n >= records.size()) return records;
  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.Shuffle(order);
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<PromptRecord> sample;
  sample.reserve(n);
  for (size_t i : order) sample.push_back(records[i]);
  return sample;
}

std::string RenderTrainingPrompt(std::string_view instruction) {
  static constexpr std::string_view kPrefix =
      "The user asks a question, and the Assistant answers it. The assistant "
      "provides the user with the answer that strictly follows the following "
      "guidelines. The answer should be enclosed within <answer> </answer> "
      "tags, respectively, i.e., <answer> ANSWER HERE </answer>. Your answer "
      "should follow these rubric criteria:\n"
      "Rubric:\n"
      "Factual Accuracy: The answer must be factually correct and does not "
      "contradict the reference answer.\n"
      "Relevance and Completeness: The answer should directly address the "
      "specific question, covering all essential aspects.\n"
      "Clarity and Organization: The answer should be well-structured, "
      "coherent, and easy to follow.\n"
      "Conciseness: The answer should avoid unnecessary repetition and be as "
      "clear and succinct as possible.\n"
      "Completeness: The answer is complete and not repetitive.\n"
      "Response Format rules:\n"
      "- Always start your response with <answer> tag and end with "
      "</answer>.\n"
      "- Do not include any text or commentary before the opening <answer> "
      "tag and after the closing </answer> tag.\n"
      "For example, your response should follow this format:\n"
      "<answer>\n"
      "[Your final detailed answer goes here]\n"
      "</answer>\n"
      "Question: ";
  std::string prompt(kPrefix);
  prompt.append(instruction);
  return prompt;
}

ExtractedAnswer ExtractAnswer(std::string_view response) {
  static constexpr std::string_view kOpen = "<answer>";
  static constexpr std::string_view kClose = "</answer>";
  auto count = [](std::string_view text, std::string_view needle) {
    size_t n = 0;
    for (size_t pos = text.find(needle); pos != std::string_view::npos;
         pos = text.find(needle, pos + needle.size())) {
      ++n;
    }
    return n;
  };

  const std::string_view trimmed = Trim(response);
  if (trimmed.size() >= kOpen.size() + kClose.size() &&
      trimmed.starts_with(kOpen) && trimmed.ends_with(kClose) &&
      count(trimmed, kOpen) == 1 && count(trimmed, kClose) == 1) {
    const std::string_view inner = trimmed.substr(
        kOpen.size(), trimmed.size() - kOpen.size() - kClose.size());
    return {std::string(Trim(inner)), true};
  }

  const size_t open = response.find(kOpen);
  if (open != std::string_view::npos) {
    const size_t body = open + kOpen.size();
    const size_t close = response.find(kClose, body);
    if (close != std::string_view::npos) {
      return {std::string(Trim(response.substr(body, close - body))), false};
    }
  }
  return {std::string(trimmed), false};
}

}  // namespace longform::corpus
