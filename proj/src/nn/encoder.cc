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

#include "longform/nn/encoder.h"

#include <cmath>

#include "longform/common/error.h"
#include "longform/common/rng.h"

namespace longform::nn {
namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

Matrix Gelu(const Matrix& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  });
}

Matrix GeluGrad(const Matrix& x) {
  return x.unaryExpr([](double v) {
    const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
    return 0.5 * (1.0 + t) +
           0.5 * v * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
  });
}

// Row-wise layer normalization. Returns gamma * xhat + beta.
Matrix LayerNormForward(const Matrix& x, const Matrix& gamma,
                        const Matrix& beta, double eps, Matrix* xhat,
                        Eigen::VectorXd* rstd) {
  const Eigen::VectorXd mean = x.rowwise().mean();
  Matrix centered = x.colwise() - mean;
  const Eigen::VectorXd var = centered.array().square().rowwise().mean();
  *rstd = (var.array() + eps).rsqrt();
  *xhat = centered.array().colwise() * rstd->array();
  return (xhat->array().rowwise() * gamma.row(0).array()).rowwise() +
         beta.row(0).array();
}

Matrix LayerNormBackward(const Matrix& dy, const Matrix& xhat,
                         const Eigen::VectorXd& rstd, const Matrix& gamma,
                         Matrix* dgamma, Matrix* dbeta) {
  *dgamma += (dy.array() * xhat.array()).colwise().sum().matrix();
  *dbeta += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gamma.row(0).array();
  const Eigen::VectorXd mean_dxhat = dxhat.rowwise().mean();
  const Eigen::VectorXd mean_dxhat_xhat =
      (dxhat.array() * xhat.array()).rowwise().mean();
  Matrix dx = dxhat;
  dx.colwise() -= mean_dxhat;
  dx.array() -= xhat.array().colwise() * mean_dxhat_xhat.array();
  dx.array().colwise() *= rstd.array();
  return dx;
}

void SoftmaxRowsInPlace(Matrix* m) {
  for (Eigen::Index r = 0; r < m->rows(); ++r) {
    auto row = m->row(r);
    const double max = row.maxCoeff();
    row = (row.array() - max).exp();
    row /= row.sum();
  }
}

void FillNormal(Rng& rng, double stddev, Matrix* m) {
  for (Eigen::Index i = 0; i < m->size(); ++i) {
    m->data()[i] = stddev * rng.Normal();
  }
}

}  // namespace

std::string_view PoolingName(Pooling pooling) {
  return pooling == Pooling::kFirstToken ? "first" : "mean";
}

Pooling ParsePooling(std::string_view name) {
  if (name == "first") return Pooling::kFirstToken;
  if (name == "mean") return Pooling::kMean;
  throw ConfigError("unknown pooling '" + std::string(name) +
                    "' (expected first or mean)");
}

void EncoderConfig::Validate() const {
  if (vocab_size <= 0) throw ConfigError("encoder vocab_size must be positive");
  if (max_length < 2) throw ConfigError("encoder max_length must be >= 2");
  if (d_model <= 0 || num_heads <= 0 || d_model % num_heads != 0) {
    throw ConfigError("encoder d_model must be a positive multiple of heads");
  }
  if (num_layers < 0 || d_ff <= 0) {
    throw ConfigError("encoder layers must be >= 0 and d_ff positive");
  }
}

EncoderConfig ApplyEncoderPreset(std::string_view preset, EncoderConfig base) {
  if (preset == "tiny") {
    base.d_model = 32, base.num_heads = 2, base.num_layers = 2, base.d_ff = 64;
  } else if (preset == "small") {
    base.d_model = 64, base.num_heads = 4, base.num_layers = 2, base.d_ff = 128;
  } else if (preset == "base") {
    base.d_model = 128, base.num_heads = 4, base.num_layers = 4,
    base.d_ff = 256;
  } else {
    throw ConfigError("unknown encoder preset '" + std::string(preset) +
                      "' (expected tiny, small or base)");
  }
  return base;
}

Json ToJson(const EncoderConfig& config) {
  return Json{{"vocab_size", config.vocab_size},
              {"max_length", config.max_length},
              {"d_model", config.d_model},
              {"num_heads", config.num_heads},
              {"num_layers", config.num_layers},
              {"d_ff", config.d_ff},
              {"pooling", PoolingName(config.pooling)},
              {"layer_norm_eps", config.layer_norm_eps}};
}

EncoderConfig EncoderConfigFromJson(const Json& json) {
  EncoderConfig config;
  config.vocab_size = json.at("vocab_size").get<int>();
  config.max_length = json.at("max_length").get<int>();
  config.d_model = json.at("d_model").get<int>();
  config.num_heads = json.at("num_heads").get<int>();
  config.num_layers = json.at("num_layers").get<int>();
  config.d_ff = json.at("d_ff").get<int>();
  config.pooling = ParsePooling(json.at("pooling").get<std::string>());
  config.layer_norm_eps = json.at("layer_norm_eps").get<double>();
  config.Validate();
  return config;
}

EncoderWeights EncoderWeights::Zeros(const EncoderConfig& config) {
  const int d = config.d_model;
  const int f = config.d_ff;
  EncoderWeights w;
  w.token_embedding = Matrix::Zero(config.vocab_size, d);
  w.position_embedding = Matrix::Zero(config.max_length, d);
  w.segment_embedding = Matrix::Zero(2, d);
  w.layers.resize(config.num_layers);
  for (LayerWeights& l : w.layers) {
    l.ln1_gamma = Matrix::Zero(1, d);
    l.ln1_beta = Matrix::Zero(1, d);
    l.wq = l.wk = l.wv = l.wo = Matrix::Zero(d, d);
    l.bq = l.bk = l.bv = l.bo = Matrix::Zero(1, d);
    l.ln2_gamma = Matrix::Zero(1, d);
    l.ln2_beta = Matrix::Zero(1, d);
    l.w1 = Matrix::Zero(d, f);
    l.b1 = Matrix::Zero(1, f);
    l.w2 = Matrix::Zero(f, d);
    l.b2 = Matrix::Zero(1, d);
  }
  w.final_gamma = Matrix::Zero(1, d);
  w.final_beta = Matrix::Zero(1, d);
  return w;
}

TensorList EncoderWeights::Tensors() {
  TensorList list = {{"token_embedding", &token_embedding},
                     {"position_embedding", &position_embedding},
                     {"segment_embedding", &segment_embedding}};
  for (size_t i = 0; i < layers.size(); ++i) {
    LayerWeights& l = layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    for (auto& [name, m] :
         std::initializer_list<std::pair<const char*, Matrix*>>{
             {"ln1_gamma", &l.ln1_gamma}, {"ln1_beta", &l.ln1_beta},
             {"wq", &l.wq},               {"wk", &l.wk},
             {"wv", &l.wv},               {"wo", &l.wo},
             {"bq", &l.bq},               {"bk", &l.bk},
             {"bv", &l.bv},               {"bo", &l.bo},
             {"ln2_gamma", &l.ln2_gamma}, {"ln2_beta", &l.ln2_beta},
             {"w1", &l.w1},               {"b1", &l.b1},
             {"w2", &l.w2},               {"b2", &l.b2}}) {
      list.emplace_back(p + name, m);
    }
  }
  list.emplace_back("final_gamma", &final_gamma);
  list.emplace_back("final_beta", &final_beta);
  return list;
}

TinyEncoder::TinyEncoder(EncoderConfig config, uint64_t seed)
    : config_(config), weights_(EncoderWeights::Zeros(config)) {
  config_.Validate();
  Rng rng(seed);
  const int d = config_.d_model;
  const int f = config_.d_ff;
  FillNormal(rng, 1.0, &weights_.token_embedding);
  FillNormal(rng, 0.1, &weights_.position_embedding);
  FillNormal(rng, 0.5, &weights_.segment_embedding);
  const double attn_std = 1.0 / std::sqrt(static_cast<double>(d));
  for (LayerWeights& l : weights_.layers) {
    l.ln1_gamma.setOnes();
    l.ln2_gamma.setOnes();
    FillNormal(rng, attn_std, &l.wq);
    FillNormal(rng, attn_std, &l.wk);
    FillNormal(rng, attn_std, &l.wv);
    FillNormal(rng, attn_std, &l.wo);
    FillNormal(rng, std::sqrt(2.0 / d), &l.w1);
    FillNormal(rng, 1.0 / std::sqrt(static_cast<double>(f)), &l.w2);
  }
  weights_.final_gamma.setOnes();
}

void TinyEncoder::CheckInput(const EncoderInput& input) const {
  const size_t length = input.ids.size();
  if (length == 0 || length != input.segments.size()) {
    throw ValidationError("encoder input must be non-empty with one segment "
                          "id per token");
  }
  if (static_cast<int>(length) > config_.max_length) {
    throw ValidationError("encoder input of " + std::to_string(length) +
                          " tokens exceeds max_length " +
                          std::to_string(config_.max_length));
  }
  for (size_t i = 0; i < length; ++i) {
    if (input.ids[i] < 0 || input.ids[i] >= config_.vocab_size) {
      throw ValidationError("token id out of range at position " +
                            std::to_string(i));
    }
    if (input.segments[i] != 0 && input.segments[i] != 1) {
      throw ValidationError("segment id must be 0 or 1");
    }
  }
}

Matrix TinyEncoder::TokenStates(const EncoderInput& input) const {
  EncoderTrace trace;
  Forward(input, &trace);
  return trace.output;
}

Eigen::RowVectorXd TinyEncoder::Forward(const EncoderInput& input,
                                        EncoderTrace* trace) const {
  CheckInput(input);
  EncoderTrace local;
  EncoderTrace& t = trace ? *trace : local;
  t.input = input;
  t.layers.assign(config_.num_layers, {});

  const int length = static_cast<int>(input.ids.size());
  const int d = config_.d_model;
  const int heads = config_.num_heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const double eps = config_.layer_norm_eps;

  Matrix x(length, d);
  for (int i = 0; i < length; ++i) {
    x.row(i) = weights_.token_embedding.row(input.ids[i]) +
               weights_.position_embedding.row(i) +
               weights_.segment_embedding.row(input.segments[i]);
  }

  for (int li = 0; li < config_.num_layers; ++li) {
    const LayerWeights& w = weights_.layers[li];
    EncoderTrace::Layer& c = t.layers[li];
    c.input = x;
    c.normed1 = LayerNormForward(x, w.ln1_gamma, w.ln1_beta, eps, &c.ln1_xhat,
                                 &c.ln1_rstd);
    c.q = (c.normed1 * w.wq).rowwise() + w.bq.row(0);
    c.k = (c.normed1 * w.wk).rowwise() + w.bk.row(0);
    c.v = (c.normed1 * w.wv).rowwise() + w.bv.row(0);
    c.context.resize(length, d);
    c.attention.resize(heads);
    for (int h = 0; h < heads; ++h) {
      Matrix scores = c.q.middleCols(h * dh, dh) *
                      c.k.middleCols(h * dh, dh).transpose() * scale;
      SoftmaxRowsInPlace(&scores);
      c.context.middleCols(h * dh, dh) = scores * c.v.middleCols(h * dh, dh);
      c.attention[h] = std::move(scores);
    }
    c.after_attention = x + ((c.context * w.wo).rowwise() + w.bo.row(0));
    c.normed2 = LayerNormForward(c.after_attention, w.ln2_gamma, w.ln2_beta,
                                 eps, &c.ln2_xhat, &c.ln2_rstd);
    c.ff_pre = (c.normed2 * w.w1).rowwise() + w.b1.row(0);
    c.ff_act = Gelu(c.ff_pre);
    x = c.after_attention + ((c.ff_act * w.w2).rowwise() + w.b2.row(0));
  }

  t.output = LayerNormForward(x, weights_.final_gamma, weights_.final_beta, eps,
                              &t.final_xhat, &t.final_rstd);
  if (config_.pooling == Pooling::kFirstToken) return t.output.row(0);
  return t.output.colwise().mean();
}

void TinyEncoder::Backward(const EncoderTrace& trace,
                           const Eigen::RowVectorXd& d_pooled,
                           EncoderWeights* grads) const {
  const int length = static_cast<int>(trace.input.ids.size());
  const int d = config_.d_model;
  const int heads = config_.num_heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix d_out = Matrix::Zero(length, d);
  if (config_.pooling == Pooling::kFirstToken) {
    d_out.row(0) = d_pooled;
  } else {
    d_out.rowwise() += d_pooled / static_cast<double>(length);
  }
  Matrix dx = LayerNormBackward(d_out, trace.final_xhat, trace.final_rstd,
                                weights_.final_gamma, &grads->final_gamma,
                                &grads->final_beta);

  for (int li = config_.num_layers - 1; li >= 0; --li) {
    const LayerWeights& w = weights_.layers[li];
    LayerWeights& g = grads->layers[li];
    const EncoderTrace::Layer& c = trace.layers[li];

    // Feed-forward residual branch.
    g.w2 += c.ff_act.transpose() * dx;
    g.b2 += dx.colwise().sum();
    const Matrix d_ff_pre =
        (dx * w.w2.transpose()).cwiseProduct(GeluGrad(c.ff_pre));
    g.w1 += c.normed2.transpose() * d_ff_pre;
    g.b1 += d_ff_pre.colwise().sum();
    const Matrix d_normed2 = d_ff_pre * w.w1.transpose();
    Matrix d_after = dx + LayerNormBackward(d_normed2, c.ln2_xhat, c.ln2_rstd,
                                            w.ln2_gamma, &g.ln2_gamma,
                                            &g.ln2_beta);

    // Attention residual branch.
    g.wo += c.context.transpose() * d_after;
    g.bo += d_after.colwise().sum();
    const Matrix d_context = d_after * w.wo.transpose();
    Matrix dq(length, d), dk(length, d), dv(length, d);
    for (int h = 0; h < heads; ++h) {
      const Matrix& p = c.attention[h];
      const auto d_ctx_h = d_context.middleCols(h * dh, dh);
      const Matrix dp = d_ctx_h * c.v.middleCols(h * dh, dh).transpose();
      dv.middleCols(h * dh, dh) = p.transpose() * d_ctx_h;
      const Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
      const Matrix ds =
          (p.array() * (dp.colwise() - row_dot).array()).matrix() * scale;
      dq.middleCols(h * dh, dh) = ds * c.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * c.q.middleCols(h * dh, dh);
    }
    g.wq += c.normed1.transpose() * dq;
    g.wk += c.normed1.transpose() * dk;
    g.wv += c.normed1.transpose() * dv;
    g.bq += dq.colwise().sum();
    g.bk += dk.colwise().sum();
    g.bv += dv.colwise().sum();
    const Matrix d_normed1 =
        dq * w.wq.transpose() + dk * w.wk.transpose() + dv * w.wv.transpose();
    dx = d_after + LayerNormBackward(d_normed1, c.ln1_xhat, c.ln1_rstd,
                                     w.ln1_gamma, &g.ln1_gamma, &g.ln1_beta);
  }

  for (int i = 0; i < length; ++i) {
    grads->token_embedding.row(trace.input.ids[i]) += dx.row(i);
    grads->position_embedding.row(i) += dx.row(i);
    grads->segment_embedding.row(trace.input.segments[i]) += dx.row(i);
  }
}

}  // namespace longform::nn
