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

#ifndef LONGFORM_TRAINING_DATASETS_H_
#define LONGFORM_TRAINING_DATASETS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "longform/common/jsonl.h"

namespace longform::training {

enum class LikertSource { kPrometheus, kMocha, kCustom };

std::string_view LikertSourceName(LikertSource source);
LikertSource ParseLikertSource(std::string_view name);

struct LikertExample {
  std::string reference;
  std::string generation;
  int gold_score = 3;  // 1..5
  LikertSource source = LikertSource::kCustom;

  bool operator==(const LikertExample&) const = default;
};

struct PreferencePair {
  std::string prompt;
  std::string chosen;
  std::string rejected;

  bool operator==(const PreferencePair&) const = default;
};

Json ToJson(const LikertExample& example);
Json ToJson(const PreferencePair& pair);

// {reference, generation, score[, source]} per line. Any malformed line is a
// ValidationError naming the line.
std::vector<LikertExample> LoadLikertExamples(const std::filesystem::path& path);
// {prompt, chosen, rejected} per line; chosen must differ from rejected.
std::vector<PreferencePair> LoadPreferencePairs(
    const std::filesystem::path& path);

void SaveLikertExamples(const std::filesystem::path& path,
                        const std::vector<LikertExample>& examples);
void SavePreferencePairs(const std::filesystem::path& path,
                         const std::vector<PreferencePair>& pairs);

struct OverlapCorpusOptions {
  int vocabulary = 40;
  int reference_words = 12;
  int generation_words = 12;
};

// Number of distinct generation words that also occur in the reference.
int DistinctOverlap(std::string_view reference, std::string_view generation);

// Synthetic Likert data whose gold score is the quantized word overlap:
// score = 1 + round_half_up(4 * overlap / reference_words). The overlap count
// is drawn uniformly so every score level is populated.
std::vector<LikertExample> MakeOverlapLikertCorpus(
    int n, uint64_t seed, const OverlapCorpusOptions& options = {});

// Synthetic preferences: the chosen response repeats words of the prompt's
// topic, the rejected one is a shuffle of random vocabulary words.
std::vector<PreferencePair> MakeTopicPreferencePairs(int n, uint64_t seed,
                                                     int vocabulary = 40);

}  // namespace longform::training

#endif  // LONGFORM_TRAINING_DATASETS_H_
