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

// Group-relative advantages and the clipped surrogate objective with a KL
// penalty, including its gradient with respect to the current policy's
// per-token log-probabilities.

#ifndef LONGFORM_GRPO_OBJECTIVE_H_
#define LONGFORM_GRPO_OBJECTIVE_H_

#include <span>
#include <string>
#include <vector>

#include "longform/common/jsonl.h"

namespace longform::grpo {

struct GrpoConfig {
  int group_size = 4;
  double clip_epsilon = 0.2;
  double kl_beta = 0.01;
  double learning_rate = 1e-6;
  int max_prompt_tokens = 1024;
  int max_gen_tokens = 1024;
  int batch_size = 128;  // prompts per optimization step
  double advantage_std_floor = 1e-6;
  // Per-token importance ratios instead of one ratio per sequence.
  bool token_level_ratio = false;
  double log_ratio_clamp = 80.0;

  void Validate() const;  // ConfigError
};

Json ToJson(const GrpoConfig& config);

// (r - mean) / max(population_std, std_floor); exactly zero when all rewards
// are equal.
std::vector<double> ComputeAdvantages(std::span<const double> rewards,
                                      double std_floor);

// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A).
double ClippedTerm(double ratio, double advantage, double epsilon);

// Mean over tokens of exp(ref - pol) - (ref - pol) - 1; 0 for empty input.
// ValidationError on length mismatch.
double KlDivergence(std::span<const double> policy_logprobs,
                    std::span<const double> ref_logprobs);

struct GenerationGroup {
  std::string prompt_id;
  std::vector<std::string> responses;
  std::vector<std::vector<double>> old_logprobs;  // per response, per token
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<int> lengths_words;  // optional, for diagnostics
};

struct Diagnostics {
  double mean_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double clip_fraction = 0.0;
  double kl = 0.0;
  double mean_length_words = 0.0;
  double mean_length_tokens = 0.0;
  int clamped_ratios = 0;
  int responses = 0;
};

Json ToJson(const Diagnostics& diagnostics);

struct ObjectiveResult {
  double objective = 0.0;
  Diagnostics diagnostics;
  // d(objective)/d(new log-prob) for every token, indexed [group][response].
  std::vector<std::vector<std::vector<double>>> gradient;
};

// objective = mean over all responses of the clipped term minus
// beta * mean per-response KL. `new_logprobs` and `ref_logprobs` are indexed
// [group][response][token] and must align with the groups' old log-probs.
ObjectiveResult GrpoObjective(
    const std::vector<GenerationGroup>& groups,
    const std::vector<std::vector<std::vector<double>>>& new_logprobs,
    const std::vector<std::vector<std::vector<double>>>& ref_logprobs,
    const GrpoConfig& config);

}  // namespace longform::grpo

#endif  // LONGFORM_GRPO_OBJECTIVE_H_
