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

#ifndef LONGFORM_GRPO_POLICY_H_
#define LONGFORM_GRPO_POLICY_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "longform/common/jsonl.h"
#include "longform/common/rng.h"
#include "longform/nn/tensors.h"

namespace longform::grpo {

struct SampledResponse {
  std::string text;  // raw response, including answer tags
  std::vector<int> tokens;
  // Log-probabilities of `tokens` under the policy itself (temperature 1),
  // whatever temperature was used for sampling.
  std::vector<double> logprobs;
};

// d(objective)/d(log-prob) for each token of one sequence.
struct SequenceGradient {
  std::string prompt;
  std::vector<int> tokens;
  std::vector<double> d_logprobs;
};

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::vector<SampledResponse> Sample(std::string_view prompt, int n,
                                              int max_tokens,
                                              double temperature,
                                              Rng& rng) const = 0;
  virtual std::vector<double> LogProbs(std::string_view prompt,
                                       const std::vector<int>& tokens) const = 0;
  // Frozen copy of the current parameters.
  virtual std::unique_ptr<Policy> Snapshot() const = 0;
  // One optimizer step that increases sum(d_logprobs * logprobs).
  virtual void ApplyGradient(const std::vector<SequenceGradient>& gradients,
                             double learning_rate) = 0;
  // Token sequence whose rendering carries `answer` (for likelihood
  // training on references). ValidationError when not representable.
  virtual std::vector<int> EncodeAnswer(std::string_view answer,
                                        int max_tokens) const = 0;
  virtual std::string Render(const std::vector<int>& tokens) const = 0;
  virtual void Save(const std::filesystem::path& path) const = 0;
  // Flat parameter copy, for update-size checks.
  virtual std::vector<double> Parameters() const = 0;
};

struct ToyPolicyConfig {
  int vocabulary = 20;  // answer symbols; one extra end-of-sequence token
  int max_tokens = 32;
  // Extra logit tables selected by a hash of the prompt; 0 disables prompt
  // conditioning.
  int prompt_slots = 0;
  double init_scale = 0.0;
  uint64_t seed = 0;
  // Adam moments for ApplyGradient.
  double beta1 = 0.9;
  double beta2 = 0.999;
};

Json ToJson(const ToyPolicyConfig& config);
ToyPolicyConfig ToyPolicyConfigFromJson(const Json& json);

// Autoregressive toy policy over a small symbol alphabet. The next-token
// logits depend on the position (and optionally a prompt hash), which is
// enough to learn length and content preferences. Symbols render as short
// words inside answer tags: "<answer>s3 s17 s0</answer>".
class ToyPolicy : public Policy {
 public:
  explicit ToyPolicy(ToyPolicyConfig config);

  int eos() const { return config_.vocabulary; }
  const ToyPolicyConfig& config() const { return config_; }
  std::string SymbolName(int token) const;

  std::vector<SampledResponse> Sample(std::string_view prompt, int n,
                                      int max_tokens, double temperature,
                                      Rng& rng) const override;
  std::vector<double> LogProbs(std::string_view prompt,
                               const std::vector<int>& tokens) const override;
  std::unique_ptr<Policy> Snapshot() const override;
  void ApplyGradient(const std::vector<SequenceGradient>& gradients,
                     double learning_rate) override;
  std::vector<int> EncodeAnswer(std::string_view answer,
                                int max_tokens) const override;
  std::string Render(const std::vector<int>& tokens) const override;
  void Save(const std::filesystem::path& path) const override;
  std::vector<double> Parameters() const override;

  static std::unique_ptr<ToyPolicy> Load(const std::filesystem::path& path);

 private:
  int Slot(std::string_view prompt) const;
  Eigen::VectorXd Logits(int slot, int position) const;

  ToyPolicyConfig config_;
  nn::Matrix shared_;                   // max_tokens x (vocabulary + 1)
  std::vector<nn::Matrix> per_prompt_;  // prompt_slots x same shape
  std::unique_ptr<nn::Adam> adam_;
};

}  // namespace longform::grpo

#endif  // LONGFORM_GRPO_POLICY_H_
