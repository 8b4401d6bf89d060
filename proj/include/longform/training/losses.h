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

// Likert normalization, the two reward-model losses, and their gradients with
// respect to a linear scoring head on pooled features.

#ifndef LONGFORM_TRAINING_LOSSES_H_
#define LONGFORM_TRAINING_LOSSES_H_

#include <span>

#include <Eigen/Dense>

namespace longform::training {

// (s - 1) / 4 for s in 1..5; ValidationError otherwise.
double NormalizeLikert(int score);

// (1/N) * sum (prediction - target)^2. ValidationError on length mismatch or
// empty input.
double MseLoss(std::span<const double> predictions,
               std::span<const double> targets);

// -log sigmoid(chosen - rejected), stable for large gaps of either sign.
double BtLoss(double chosen_score, double rejected_score);

struct HeadGradient {
  double loss = 0.0;
  Eigen::VectorXd d_weights;  // d
  double d_bias = 0.0;
  Eigen::MatrixXd d_features;  // N x d (for BT: chosen rows, then rejected)
};

// Loss and gradients of mse_loss(sigmoid(F w + b), targets); F is N x d.
HeadGradient MseHeadGradient(const Eigen::MatrixXd& features,
                             std::span<const double> targets,
                             const Eigen::VectorXd& weights, double bias);

// Mean BT loss over pairs with raw scores (F w + b); `chosen` and `rejected`
// are N x d with matching rows. d_features stacks the chosen block on top of
// the rejected block (2N x d). The bias cancels, so d_bias is always 0.
HeadGradient BtHeadGradient(const Eigen::MatrixXd& chosen,
                            const Eigen::MatrixXd& rejected,
                            const Eigen::VectorXd& weights, double bias);

}  // namespace longform::training

#endif  // LONGFORM_TRAINING_LOSSES_H_
