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

// Loading, filtering, splitting and prompt templating for the long-form
// instruction corpora (ELI5, Alpaca, LongForm or any custom JSONL).

#ifndef LONGFORM_CORPUS_CORPUS_H_
#define LONGFORM_CORPUS_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "longform/common/jsonl.h"

namespace longform::corpus {

enum class Source { kEli5, kAlpaca, kLongform, kCustom };
enum class Split { kTrain, kTest };

std::string_view SourceName(Source source);
std::optional<Source> ParseSource(std::string_view name);
std::string_view SplitName(Split split);

struct PromptRecord {
  std::string id;
  Source source = Source::kCustom;
  std::string instruction;
  std::string reference;
  Split split = Split::kTrain;

  friend bool operator==(const PromptRecord&, const PromptRecord&) = default;
};

Json ToJson(const PromptRecord& record);
PromptRecord PromptRecordFromJson(const Json& row);

struct CorpusStats {
  int64_t count = 0;
  double mean_ref_words = 0.0;
  std::map<Source, int64_t> per_source_counts;
};

CorpusStats ComputeStats(const std::vector<PromptRecord>& records);
Json ToJson(const CorpusStats& stats);

struct RecordError {
  int line_number = 0;
  std::string message;
};

struct LoadResult {
  std::vector<PromptRecord> records;
  std::vector<RecordError> errors;
};

inline constexpr double kMaxMalformedFraction = 0.10;

// Reads one record per line. Accepted keys: `instruction` or `question`;
// `reference`, `output` or `answer`; optional `id` and `split`. Lines that
// fail are reported in `errors`. More than one failing line that is also more
// than 10% of the lines throws ValidationError. A missing file throws IoError.
LoadResult LoadCorpus(const std::filesystem::path& path, Source source);

// Drops records whose reference has fewer than `min_ref_words` words and,
// when `exclude_code` is set, records with a fenced code block in either the
// instruction or the reference.
std::vector<PromptRecord> FilterCorpus(const std::vector<PromptRecord>& records,
                                       int min_ref_words, bool exclude_code);

struct CorpusSplit {
  std::vector<PromptRecord> train;
  std::vector<PromptRecord> test;
};

// Seeded shuffle; |test| = round_half_up(test_fraction * N). Requires N >= 2
// and 0 < test_fraction < 1.
CorpusSplit SplitCorpus(const std::vector<PromptRecord>& records,
                        double test_fraction, uint64_t seed);

// Uniform sample without replacement, order of the input preserved. Returns
// everything when n >= size.
std::vector<PromptRecord> SampleRecords(const std::vector<PromptRecord>& records,
                                        size_t n, uint64_t seed);

std::string RenderTrainingPrompt(std::string_view instruction);

struct ExtractedAnswer {
  std::string answer;
  bool well_formed = false;
};

// Pulls the text between <answer> and </answer>. well_formed requires the
// trimmed response to be exactly one tagged block.
ExtractedAnswer ExtractAnswer(std::string_view response);

}  // namespace longform::corpus

#endif  // LONGFORM_CORPUS_CORPUS_H_
