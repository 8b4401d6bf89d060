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

#ifndef LONGFORM_TRAINING_TRAINER_H_
#define LONGFORM_TRAINING_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "longform/common/jsonl.h"
#include "longform/nn/encoder.h"
#include "longform/training/datasets.h"
#include "longform/training/scorer.h"

namespace longform::training {

struct TrainConfig {
  double learning_rate = 2e-5;
  int batch_size = 32;
  int epochs = 3;
  double heldout_fraction = 0.2;
  uint64_t seed = 0;
  // Train only the head on features from the initial encoder.
  bool freeze_encoder = false;
  double weight_decay = 0.0;
  int vocab_max_words = 30000;
  int vocab_min_count = 1;
  int hash_buckets = 512;

  void Validate() const;  // ConfigError
};

Json ToJson(const TrainConfig& config);

struct TrainReport {
  ScorerKind kind = ScorerKind::kPrefBert;
  size_t train_size = 0;
  size_t heldout_size = 0;
  std::vector<double> epoch_train_loss;
  // Absent when the held-out split is empty.
  bool has_heldout = false;
  double heldout_loss = 0.0;
  double heldout_mse = 0.0;               // prefbert
  double heldout_spearman = 0.0;          // prefbert, predictions vs gold
  double heldout_pairwise_accuracy = 0.0; // grm
  double seconds = 0.0;
};

Json ToJson(const TrainReport& report);

struct TrainResult {
  PairScorer model;
  TrainReport report;
};

using EpochCallback = std::function<void(int epoch, double train_loss)>;

// Fits encoder + head by minimizing MSE between sigmoid(w.h+b) and the
// normalized gold score. NumericError on a non-finite loss.
TrainResult TrainPrefBert(const std::vector<LikertExample>& examples,
                          const nn::EncoderConfig& encoder_config,
                          const TrainConfig& config,
                          const EpochCallback& on_epoch = nullptr);

// Fits a (prompt, response) scorer by minimizing the mean Bradley-Terry loss.
TrainResult TrainGrm(const std::vector<PreferencePair>& pairs,
                     const nn::EncoderConfig& encoder_config,
                     const TrainConfig& config,
                     const EpochCallback& on_epoch = nullptr);

// Minibatch Adam on a sigmoid-MSE head over fixed features (N x d). Updates
// `weights` (d x 1) and `bias` (1 x 1) in place; returns per-epoch loss.
std::vector<double> FitMseHead(const Eigen::MatrixXd& features,
                               std::span<const double> targets,
                               const TrainConfig& config, nn::Matrix* weights,
                               nn::Matrix* bias);

}  // namespace longform::training

#endif  // LONGFORM_TRAINING_TRAINER_H_
