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

#ifndef LONGFORM_NN_TOKENIZER_H_
#define LONGFORM_NN_TOKENIZER_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace longform::nn {

// Word-level tokenizer over NormalizedTokens(): a frequency-ranked word
// vocabulary plus hashed buckets for out-of-vocabulary words, so unseen words
// stay distinguishable from each other instead of collapsing onto [UNK].
class WordTokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kNumSpecial = 4;

  WordTokenizer() = default;
  WordTokenizer(std::vector<std::string> words, int hash_buckets);

  // Keeps the `max_words` most frequent tokens seen at least `min_count`
  // times. Ties break lexicographically.
  static WordTokenizer Build(const std::vector<std::string>& texts,
                             int max_words, int min_count, int hash_buckets);

  std::vector<int> Encode(std::string_view text) const;

  int vocab_size() const {
    return kNumSpecial + static_cast<int>(words_.size()) + hash_buckets_;
  }
  int hash_buckets() const { return hash_buckets_; }
  const std::vector<std::string>& words() const { return words_; }

  // Identifies the tokenization scheme and table sizes; stored in manifests.
  std::string id() const;

  void Save(const std::filesystem::path& path) const;
  static WordTokenizer Load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  int hash_buckets_ = 0;
};

}  // namespace longform::nn

#endif  // LONGFORM_NN_TOKENIZER_H_
