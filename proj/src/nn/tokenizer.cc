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

#include "longform/nn/tokenizer.h"

#include <algorithm>
#include <fstream>
#include <map>

#include "longform/common/error.h"
#include "longform/common/text.h"

namespace longform::nn {
namespace {

constexpr std::string_view kHeader = "# longform-word-tokenizer v1 buckets=";

}  // namespace

WordTokenizer::WordTokenizer(std::vector<std::string> words, int hash_buckets)
    : words_(std::move(words)), hash_buckets_(hash_buckets) {
  if (hash_buckets_ < 0) throw ValidationError("hash_buckets", "must be >= 0");
  for (size_t i = 0; i < words_.size(); ++i) {
    index_.emplace(words_[i], kNumSpecial + static_cast<int>(i));
  }
}

WordTokenizer WordTokenizer::Build(const std::vector<std::string>& texts,
                                   int max_words, int min_count,
                                   int hash_buckets) {
  std::map<std::string, int> counts;
  for (const std::string& text : texts) {
    for (std::string& token : NormalizedTokens(text)) ++counts[std::move(token)];
  }
  std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (auto& [word, count] : ranked) {
    if (static_cast<int>(words.size()) >= max_words || count < min_count) break;
    words.push_back(word);
  }
  return WordTokenizer(std::move(words), hash_buckets);
}

std::vector<int> WordTokenizer::Encode(std::string_view text) const {
  std::vector<int> ids;
  const int first_bucket = kNumSpecial + static_cast<int>(words_.size());
  for (const std::string& token : NormalizedTokens(text)) {
    auto it = index_.find(token);
    if (it != index_.end()) {
      ids.push_back(it->second);
    } else if (hash_buckets_ > 0) {
      ids.push_back(first_bucket +
                    static_cast<int>(Fnv1a64(token) %
                                     static_cast<uint64_t>(hash_buckets_)));
    } else {
      ids.push_back(kUnk);
    }
  }
  return ids;
}

std::string WordTokenizer::id() const {
  return "word-lower-punct-v1/words=" + std::to_string(words_.size()) +
         "/buckets=" + std::to_string(hash_buckets_);
}

void WordTokenizer::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << kHeader << hash_buckets_ << '\n';
  for (const std::string& word : words_) out << word << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

WordTokenizer WordTokenizer::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kHeader)) {
    throw IoError(path.string() + ": not a tokenizer vocabulary");
  }
  const int buckets = std::stoi(line.substr(kHeader.size()));
  std::vector<std::string> words;
  while (std::getline(in, line)) words.push_back(line);
  return WordTokenizer(std::move(words), buckets);
}

}  // namespace longform::nn
