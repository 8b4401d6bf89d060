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

// Scalar reward signals in [0, 1] behind one interface, plus group scoring
// with the answer-format gate used during policy optimization.

#ifndef LONGFORM_REWARD_SIGNALS_H_
#define LONGFORM_REWARD_SIGNALS_H_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "longform/training/scorer.h"

namespace longform::reward {

struct RewardRequest {
  std::string prompt;
  std::string reference;
  std::string generation;  // extracted answer, not the raw tagged response
};

struct SignalScore {
  double value = 0.0;
  bool truncated = false;
  bool degenerate = false;  // empty input side
};

class RewardSignal {
 public:
  virtual ~RewardSignal() = default;
  virtual std::string_view name() const = 0;
  // Thread-safe; never mutates the signal.
  virtual SignalScore Score(const RewardRequest& request) const = 0;
};

struct RewardValue {
  double value = 0.0;
  std::string signal_name;
  bool format_ok = true;
  bool truncated = false;
  bool degenerate = false;
};

// LCS F-measure (beta = 1) over NormalizedTokens(); 0 when either side is
// empty or nothing matches.
double RougeL(std::string_view reference, std::string_view generation);

struct TokenEmbedding {
  std::string token;
  Eigen::VectorXd vector;  // unit length
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<TokenEmbedding> EmbedTokens(
      std::string_view text) const = 0;
};

// Deterministic pseudo-random unit vector per token, mixed with its
// neighbours by `context_weight` so that a token's vector depends on its
// context. Needs no trained weights.
class HashedEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashedEmbeddingProvider(int dim = 64, double context_weight = 0.25,
                                   uint64_t seed = 0);
  std::vector<TokenEmbedding> EmbedTokens(std::string_view text) const override;

 private:
  Eigen::VectorXd TokenVector(const std::string& token) const;

  int dim_;
  double context_weight_;
  uint64_t seed_;
};

// Final token states of a trained encoder over "[CLS] text", normalized.
class EncoderEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit EncoderEmbeddingProvider(
      std::shared_ptr<const training::PairScorer> model);
  std::vector<TokenEmbedding> EmbedTokens(std::string_view text) const override;

 private:
  std::shared_ptr<const training::PairScorer> model_;
};

// Greedy-matching F1 over cosine similarities clamped to [0, 1]. Returns 0 and
// sets `*degenerate` when either side yields no vectors.
double EmbedSimilarity(std::string_view reference, std::string_view generation,
                       const EmbeddingProvider& provider,
                       bool* degenerate = nullptr);

class RougeLSignal : public RewardSignal {
 public:
  std::string_view name() const override { return "rouge_l"; }
  SignalScore Score(const RewardRequest& request) const override;
};

class EmbedSimSignal : public RewardSignal {
 public:
  explicit EmbedSimSignal(std::shared_ptr<const EmbeddingProvider> provider);
  std::string_view name() const override { return "embed_sim"; }
  SignalScore Score(const RewardRequest& request) const override;

 private:
  std::shared_ptr<const EmbeddingProvider> provider_;
};

// sigmoid(raw) of a preference model on (prompt, generation); the reference
// is ignored.
class GrmSignal : public RewardSignal {
 public:
  explicit GrmSignal(std::shared_ptr<const training::PairScorer> model);
  std::string_view name() const override { return "grm"; }
  SignalScore Score(const RewardRequest& request) const override;

 private:
  std::shared_ptr<const training::PairScorer> model_;
};

// Likert regressor on (reference, generation).
class PrefBertSignal : public RewardSignal {
 public:
  explicit PrefBertSignal(std::shared_ptr<const training::PairScorer> model);
  std::string_view name() const override { return "prefbert"; }
  SignalScore Score(const RewardRequest& request) const override;

 private:
  std::shared_ptr<const training::PairScorer> model_;
};

// 1 - |words - target| / target, floored at 0.
class TargetLengthSignal : public RewardSignal {
 public:
  explicit TargetLengthSignal(int target_words);
  std::string_view name() const override { return "target_length"; }
  SignalScore Score(const RewardRequest& request) const override;

 private:
  int target_words_;
};

// min(words, cap) / cap: rewards length alone.
class LengthSignal : public RewardSignal {
 public:
  explicit LengthSignal(int cap_words);
  std::string_view name() const override { return "length"; }
  SignalScore Score(const RewardRequest& request) const override;

 private:
  int cap_words_;
};

struct SignalConfig {
  std::string name = "rouge_l";
  std::string model_path;  // grm / prefbert; embed_sim optionally
  int embedding_dim = 64;
  int target_words = 12;
  int length_cap_words = 64;
};

// Builds a signal by name; ConfigError for unknown names or unusable models.
std::unique_ptr<RewardSignal> MakeSignal(const SignalConfig& config);

// Scores raw tagged responses. Each passes through ExtractAnswer; with
// `format_gate`, malformed responses get value 0 and format_ok = false.
std::vector<RewardValue> ScoreGroup(const RewardSignal& signal,
                                    std::string_view prompt,
                                    std::string_view reference,
                                    const std::vector<std::string>& responses,
                                    bool format_gate);

}  // namespace longform::reward

#endif  // LONGFORM_REWARD_SIGNALS_H_
