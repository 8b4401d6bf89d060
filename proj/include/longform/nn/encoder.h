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

// A small bidirectional transformer encoder (pre-LayerNorm, GELU feed-forward,
// learned absolute positions and two segment embeddings) with hand-written
// reverse-mode gradients. Sized for desk-scale reward-model training on CPU.

#ifndef LONGFORM_NN_ENCODER_H_
#define LONGFORM_NN_ENCODER_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "longform/common/jsonl.h"
#include "longform/nn/tensors.h"

namespace longform::nn {

enum class Pooling { kFirstToken, kMean };

std::string_view PoolingName(Pooling pooling);
Pooling ParsePooling(std::string_view name);

struct EncoderConfig {
  int vocab_size = 0;
  int max_length = 256;
  int d_model = 32;
  int num_heads = 2;
  int num_layers = 2;
  int d_ff = 64;
  Pooling pooling = Pooling::kFirstToken;
  double layer_norm_eps = 1e-5;

  // Validates the shape constraints; throws ConfigError.
  void Validate() const;
};

// Resolves an architecture preset: "tiny" (2 layers, d=32), "small"
// (2 layers, d=64) or "base" (4 layers, d=128). Vocabulary size, length
// budget and pooling stay as given in `base`.
EncoderConfig ApplyEncoderPreset(std::string_view preset, EncoderConfig base);

Json ToJson(const EncoderConfig& config);
EncoderConfig EncoderConfigFromJson(const Json& json);

struct LayerWeights {
  Matrix ln1_gamma, ln1_beta;  // 1 x d
  Matrix wq, wk, wv, wo;       // d x d
  Matrix bq, bk, bv, bo;       // 1 x d
  Matrix ln2_gamma, ln2_beta;  // 1 x d
  Matrix w1, b1;               // d x f, 1 x f
  Matrix w2, b2;               // f x d, 1 x d
};

struct EncoderWeights {
  Matrix token_embedding;     // vocab x d
  Matrix position_embedding;  // max_length x d
  Matrix segment_embedding;   // 2 x d
  std::vector<LayerWeights> layers;
  Matrix final_gamma, final_beta;  // 1 x d

  static EncoderWeights Zeros(const EncoderConfig& config);
  TensorList Tensors();
};

struct EncoderInput {
  std::vector<int> ids;
  std::vector<int> segments;  // 0 or 1 per position
};

// Intermediate activations kept by Forward() for Backward().
struct EncoderTrace {
  struct Layer {
    Matrix input;           // L x d
    Matrix ln1_xhat;        // L x d
    Eigen::VectorXd ln1_rstd;
    Matrix normed1;         // L x d
    Matrix q, k, v;         // L x d
    std::vector<Matrix> attention;  // per head, L x L
    Matrix context;         // L x d, heads concatenated
    Matrix after_attention; // L x d
    Matrix ln2_xhat;
    Eigen::VectorXd ln2_rstd;
    Matrix normed2;
    Matrix ff_pre;          // L x f
    Matrix ff_act;          // L x f
  };
  EncoderInput input;
  std::vector<Layer> layers;
  Matrix final_xhat;
  Eigen::VectorXd final_rstd;
  Matrix output;  // L x d token states
};

class TinyEncoder {
 public:
  TinyEncoder() = default;
  // Random initialization from `seed`.
  TinyEncoder(EncoderConfig config, uint64_t seed);

  const EncoderConfig& config() const { return config_; }
  EncoderWeights& weights() { return weights_; }
  const EncoderWeights& weights() const { return weights_; }
  int dim() const { return config_.d_model; }

  // Final token states, L x d.
  Matrix TokenStates(const EncoderInput& input) const;

  // Pooled 1 x d summary. `trace` may be null for inference.
  Eigen::RowVectorXd Forward(const EncoderInput& input,
                             EncoderTrace* trace) const;

  // Accumulates d(loss)/d(weights) into `grads` given d(loss)/d(pooled).
  void Backward(const EncoderTrace& trace, const Eigen::RowVectorXd& d_pooled,
                EncoderWeights* grads) const;

 private:
  void CheckInput(const EncoderInput& input) const;

  EncoderConfig config_;
  EncoderWeights weights_;
};

}  // namespace longform::nn

#endif  // LONGFORM_NN_ENCODER_H_
