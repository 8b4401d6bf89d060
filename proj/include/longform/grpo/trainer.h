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

#ifndef LONGFORM_GRPO_TRAINER_H_
#define LONGFORM_GRPO_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "longform/common/jsonl.h"
#include "longform/corpus/corpus.h"
#include "longform/grpo/objective.h"
#include "longform/grpo/policy.h"
#include "longform/reward/signals.h"

namespace longform::grpo {

struct GrpoRunConfig {
  GrpoConfig grpo;
  int steps = 100;
  double temperature = 1.0;
  bool format_gate = true;
  uint64_t seed = 0;
  // Appended to after every step when set.
  std::optional<std::filesystem::path> curve_path;
};

struct CurvePoint {
  int step = 0;
  double mean_reward = 0.0;
  double mean_length_words = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  double objective = 0.0;
  bool skipped = false;  // update dropped for a non-finite gradient
};

Json ToJson(const CurvePoint& point);

struct GrpoRunResult {
  std::vector<CurvePoint> curve;
  int skipped_updates = 0;
};

// Per-step loop: render prompts, sample a group per prompt, score with
// format gating, standardize rewards within each group and take one ascent
// step on the clipped objective. The KL reference is the policy as passed
// in. Three consecutive non-finite gradients raise NumericError.
GrpoRunResult GrpoTrain(Policy& policy,
                        const std::vector<corpus::PromptRecord>& prompts,
                        const reward::RewardSignal& signal,
                        const GrpoRunConfig& config);

struct SftConfig {
  int epochs = 3;
  double learning_rate = 1e-5;
  int batch_size = 128;
  int max_tokens = 4096;
  double heldout_fraction = 0.0;
  uint64_t seed = 0;

  void Validate() const;
};

Json ToJson(const SftConfig& config);

struct SftReport {
  std::vector<double> epoch_train_loss;  // mean per-token NLL
  bool has_heldout = false;
  std::vector<double> epoch_heldout_loss;
  size_t train_size = 0;
  size_t heldout_size = 0;
};

Json ToJson(const SftReport& report);

// Maximizes the likelihood of each reference under its rendered prompt.
SftReport SftTrain(Policy& policy,
                   const std::vector<corpus::PromptRecord>& records,
                   const SftConfig& config);

// Mean per-token negative log-likelihood of the references.
double SequenceNll(const Policy& policy,
                   const std::vector<corpus::PromptRecord>& records,
                   int max_tokens);

}  // namespace longform::grpo

#endif  // LONGFORM_GRPO_TRAINER_H_
