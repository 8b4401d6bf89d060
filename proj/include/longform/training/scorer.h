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

// Encoder-based pair scorers. One architecture serves both learned rewards:
// the Likert regressor reads (reference, generation) and the preference model
// reads (prompt, generation); both put a linear head on the pooled encoder
// state and report sigmoid(head) as the reward.

#ifndef LONGFORM_TRAINING_SCORER_H_
#define LONGFORM_TRAINING_SCORER_H_

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "longform/common/jsonl.h"
#include "longform/nn/encoder.h"
#include "longform/nn/tokenizer.h"

namespace longform::training {

enum class ScorerKind { kPrefBert, kGrm };

std::string_view ScorerKindName(ScorerKind kind);
ScorerKind ParseScorerKind(std::string_view name);

struct PairInput {
  nn::EncoderInput input;
  bool degenerate = false;  // one side had no tokens
  bool truncated = false;
};

// [CLS] first [SEP] second, segment 0 through the separator and segment 1
// after it. When the pair exceeds `max_length`, the second text is cut first
// (down to half of the content budget), then the first; heads are kept.
PairInput BuildPairInput(const nn::WordTokenizer& tokenizer,
                         std::string_view first, std::string_view second,
                         int max_length);

class PairScorer {
 public:
  PairScorer() = default;
  PairScorer(ScorerKind kind, nn::WordTokenizer tokenizer,
             nn::EncoderConfig config, uint64_t seed);

  ScorerKind kind() const { return kind_; }
  const nn::WordTokenizer& tokenizer() const { return tokenizer_; }
  nn::TinyEncoder& encoder() { return encoder_; }
  const nn::TinyEncoder& encoder() const { return encoder_; }
  nn::Matrix& head_weights() { return head_weights_; }  // d x 1
  nn::Matrix& head_bias() { return head_bias_; }        // 1 x 1
  const nn::Matrix& head_weights() const { return head_weights_; }
  const nn::Matrix& head_bias() const { return head_bias_; }

  PairInput Encode(std::string_view first, std::string_view second) const;
  double RawFromFeatures(const Eigen::RowVectorXd& features) const;

  // Unbounded head output w.h + b.
  double Raw(std::string_view first, std::string_view second,
             PairInput* encoded = nullptr) const;
  // sigmoid(Raw); always in [0, 1].
  double Score(std::string_view first, std::string_view second,
               PairInput* encoded = nullptr) const;

  // Encoder and head parameters in a fixed order (Adam / serialization).
  nn::TensorList Tensors();

  Json Manifest() const;
  // Writes manifest.json, vocab.txt, encoder.bin and head.bin into `dir`.
  void Save(const std::filesystem::path& dir) const;
  static PairScorer Load(const std::filesystem::path& dir);

 private:
  ScorerKind kind_ = ScorerKind::kPrefBert;
  nn::WordTokenizer tokenizer_;
  nn::TinyEncoder encoder_;
  nn::Matrix head_weights_;
  nn::Matrix head_bias_;
};

}  // namespace longform::training

#endif  // LONGFORM_TRAINING_SCORER_H_
