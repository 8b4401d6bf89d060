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

#include "longform/training/losses.h"

#include <string>

#include "longform/common/error.h"
#include "longform/common/stats.h"

namespace longform::training {

double NormalizeLikert(int score) {
  if (score < 1 || score > 5) {
    throw ValidationError("score", "Likert score must be in 1..5, got " +
                                       std::to_string(score));
  }
  return (score - 1) / 4.0;
}

double MseLoss(std::span<const double> predictions,
               std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw ValidationError("mse_loss: " + std::to_string(predictions.size()) +
                          " predictions vs " + std::to_string(targets.size()) +
                          " targets");
  }
  if (predictions.empty()) throw ValidationError("mse_loss: empty input");
  double total = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    const double diff = predictions[i] - targets[i];
    total += diff * diff;
  }
  return total / static_cast<double>(predictions.size());
}

double BtLoss(double chosen_score, double rejected_score) {
  return -LogSigmoid(chosen_score - rejected_score);
}

HeadGradient MseHeadGradient(const Eigen::MatrixXd& features,
                             std::span<const double> targets,
                             const Eigen::VectorXd& weights, double bias) {
  const Eigen::Index n = features.rows();
  if (n == 0 || static_cast<size_t>(n) != targets.size() ||
      features.cols() != weights.size()) {
    throw ValidationError("mse head gradient: shape mismatch");
  }
  const Eigen::VectorXd raw = (features * weights).array() + bias;
  Eigen::VectorXd d_raw(n);
  HeadGradient g;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = Sigmoid(raw[i]);
    const double diff = p - targets[i];
    g.loss += diff * diff;
    d_raw[i] = 2.0 * diff * p * (1.0 - p) / static_cast<double>(n);
  }
  g.loss /= static_cast<double>(n);
  g.d_weights = features.transpose() * d_raw;
  g.d_bias = d_raw.sum();
  g.d_features = d_raw * weights.transpose();
  return g;
}

HeadGradient BtHeadGradient(const Eigen::MatrixXd& chosen,
                            const Eigen::MatrixXd& rejected,
                            const Eigen::VectorXd& weights, double bias) {
  const Eigen::Index n = chosen.rows();
  if (n == 0 || rejected.rows() != n || chosen.cols() != weights.size() ||
      rejected.cols() != weights.size()) {
    throw ValidationError("bt head gradient: shape mismatch");
  }
  const Eigen::VectorXd rc = (chosen * weights).array() + bias;
  const Eigen::VectorXd rr = (rejected * weights).array() + bias;
  Eigen::VectorXd d_gap(n);
  HeadGradient g;
  for (Eigen::Index i = 0; i < n; ++i) {
    g.loss += BtLoss(rc[i], rr[i]);
    d_gap[i] = (Sigmoid(rc[i] - rr[i]) - 1.0) / static_cast<double>(n);
  }
  g.loss /= static_cast<double>(n);
  g.d_weights = chosen.transpose() * d_gap - rejected.transpose() * d_gap;
  g.d_features.resize(2 * n, weights.size());
  g.d_features.topRows(n) = d_gap * weights.transpose();
  g.d_features.bottomRows(n) = -d_gap * weights.transpose();
  return g;
}

}  // namespace longform::training
