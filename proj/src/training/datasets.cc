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

#include "longform/training/datasets.h"

#include <cstdio>
#include <set>

#include "longform/common/error.h"
#include "longform/common/rng.h"
#include "longform/common/stats.h"
#include "longform/common/text.h"

namespace longform::training {
namespace {

std::string VocabWord(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%03d", index);
  return buf;
}

std::string JoinWords(const std::vector<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ' ';
    out += VocabWord(id);
  }
  return out;
}

// k distinct draws from [0, n) in random order.
std::vector<int> DrawDistinct(Rng& rng, int n, int k) {
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  rng.Shuffle(all);
  all.resize(k);
  return all;
}

std::string RequireString(const Json& row, const char* key, int line) {
  auto it = row.find(key);
  if (it == row.end() || !it->is_string()) {
    throw ValidationError(std::string(key),
                          "line " + std::to_string(line) +
                              ": missing or non-string field");
  }
  return it->get<std::string>();
}

template <typename Fn>
void ForEachRow(const std::filesystem::path& path, Fn fn) {
  ForEachJsonLine(path, [&](const JsonLine& line) {
    if (!line.value || !line.value->is_object()) {
      throw ValidationError(path.string() + " line " +
                            std::to_string(line.line_number) +
                            ": not a JSON object");
    }
    fn(*line.value, line.line_number);
  });
}

}  // namespace

std::string_view LikertSourceName(LikertSource source) {
  switch (source) {
    case LikertSource::kPrometheus:
      return "prometheus";
    case LikertSource::kMocha:
      return "mocha";
    case LikertSource::kCustom:
      return "custom";
  }
  return "custom";
}

LikertSource ParseLikertSource(std::string_view name) {
  if (name == "prometheus") return LikertSource::kPrometheus;
  if (name == "mocha") return LikertSource::kMocha;
  if (name == "custom") return LikertSource::kCustom;
  throw ValidationError("source", "unknown Likert source '" +
                                      std::string(name) + "'");
}

Json ToJson(const LikertExample& example) {
  return Json{{"reference", example.reference},
              {"generation", example.generation},
              {"score", example.gold_score},
              {"source", LikertSourceName(example.source)}};
}

Json ToJson(const PreferencePair& pair) {
  return Json{{"prompt", pair.prompt},
              {"chosen", pair.chosen},
              {"rejected", pair.rejected}};
}

std::vector<LikertExample> LoadLikertExamples(
    const std::filesystem::path& path) {
  std::vector<LikertExample> out;
  ForEachRow(path, [&](const Json& row, int line) {
    LikertExample ex;
    ex.reference = RequireString(row, "reference", line);
    ex.generation = RequireString(row, "generation", line);
    auto score = row.find("score");
    if (score == row.end() || !score->is_number_integer()) {
      throw ValidationError("score", "line " + std::to_string(line) +
                                         ": missing or non-integer score");
    }
    ex.gold_score = score->get<int>();
    if (ex.gold_score < 1 || ex.gold_score > 5) {
      throw ValidationError("score", "line " + std::to_string(line) +
                                         ": score must be in 1..5");
    }
    if (auto src = row.find("source"); src != row.end()) {
      ex.source = ParseLikertSource(src->get<std::string>());
    }
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<PreferencePair> LoadPreferencePairs(
    const std::filesystem::path& path) {
  std::vector<PreferencePair> out;
  ForEachRow(path, [&](const Json& row, int line) {
    PreferencePair pair{RequireString(row, "prompt", line),
                        RequireString(row, "chosen", line),
                        RequireString(row, "rejected", line)};
    if (pair.chosen == pair.rejected) {
      throw ValidationError("rejected", "line " + std::to_string(line) +
                                            ": chosen equals rejected");
    }
    out.push_back(std::move(pair));
  });
  return out;
}

void SaveLikertExamples(const std::filesystem::path& path,
                        const std::vector<LikertExample>& examples) {
  std::vector<Json> rows;
  for (const auto& ex : examples) rows.push_back(ToJson(ex));
  WriteJsonl(path, rows);
}

void SavePreferencePairs(const std::filesystem::path& path,
                         const std::vector<PreferencePair>& pairs) {
  std::vector<Json> rows;
  for (const auto& p : pairs) rows.push_back(ToJson(p));
  WriteJsonl(path, rows);
}

int DistinctOverlap(std::string_view reference, std::string_view generation) {
  std::set<std::string> ref;
  for (std::string_view w : SplitWords(reference)) ref.emplace(w);
  std::set<std::string> shared;
  for (std::string_view w : SplitWords(generation)) {
    if (ref.count(std::string(w))) shared.emplace(w);
  }
  return static_cast<int>(shared.size());
}

std::vector<LikertExample> MakeOverlapLikertCorpus(
    int n, uint64_t seed, const OverlapCorpusOptions& options) {
  const int r = options.reference_words;
  const int g = options.generation_words;
  if (n < 0 || r < 1 || g < 1 || options.vocabulary < r + g) {
    throw ValidationError("invalid synthetic corpus options");
  }
  Rng rng(seed);
  std::vector<LikertExample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const std::vector<int> words = DrawDistinct(rng, options.vocabulary, r + g);
    const std::vector<int> reference(words.begin(), words.begin() + r);
    const int k = static_cast<int>(rng.UniformInt(std::min(r, g) + 1));
    std::vector<int> shared = reference;
    rng.Shuffle(shared);
    std::vector<int> generation(shared.begin(), shared.begin() + k);
    generation.insert(generation.end(), words.begin() + r,
                      words.begin() + r + (g - k));
    rng.Shuffle(generation);
    LikertExample ex;
    ex.reference = JoinWords(reference);
    ex.generation = JoinWords(generation);
    ex.gold_score = 1 + static_cast<int>(RoundHalfUp(4.0 * k / r));
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<PreferencePair> MakeTopicPreferencePairs(int n, uint64_t seed,
                                                     int vocabulary) {
  constexpr int kPromptWords = 8;
  constexpr int kResponseWords = 10;
  if (n < 0 || vocabulary < 2 * kPromptWords) {
    throw ValidationError("invalid synthetic preference options");
  }
  Rng rng(seed);
  std::vector<PreferencePair> out;
  out.reserve(n);
  while (static_cast<int>(out.size()) < n) {
    const std::vector<int> topic = DrawDistinct(rng, vocabulary, kPromptWords);
    std::vector<int> chosen;
    for (int i = 0; i < kResponseWords; ++i) {
      chosen.push_back(topic[rng.UniformInt(kPromptWords)]);
    }
    std::vector<int> rejected;
    for (int i = 0; i < kResponseWords; ++i) {
      rejected.push_back(static_cast<int>(rng.UniformInt(vocabulary)));
    }
    rng.Shuffle(rejected);
    PreferencePair pair{JoinWords(topic), JoinWords(chosen),
                        JoinWords(rejected)};
    if (pair.chosen != pair.rejected) out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace longform::training
