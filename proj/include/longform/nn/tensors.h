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

#ifndef LONGFORM_NN_TENSORS_H_
#define LONGFORM_NN_TENSORS_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace longform::nn {

using Matrix = Eigen::MatrixXd;

// Non-owning, ordered view over named parameter (or gradient) tensors. Two
// lists built from objects of the same shape line up index by index.
using TensorList = std::vector<std::pair<std::string, Matrix*>>;

void ZeroTensors(const TensorList& tensors);
double SquaredNorm(const TensorList& tensors);
bool AllFinite(const TensorList& tensors);

// Binary format: magic, tensor count, then per tensor name, rows, cols and
// raw little-endian doubles. Loading checks names and shapes against the
// destination list, so a reload is bit-identical.
void SaveTensors(const std::filesystem::path& path, const TensorList& tensors);
void LoadTensors(const std::filesystem::path& path, const TensorList& tensors);

struct AdamConfig {
  double learning_rate = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled (AdamW)
};

// Minimizes: params -= lr * m_hat / (sqrt(v_hat) + eps). Moment buffers are
// allocated on the first step from the parameter shapes.
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  void Step(const TensorList& params, const TensorList& grads);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  int steps() const { return steps_; }

 private:
  AdamConfig config_;
  int steps_ = 0;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
};

}  // namespace longform::nn

#endif  // LONGFORM_NN_TENSORS_H_
