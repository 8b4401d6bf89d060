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

#include "longform/training/trainer.h"

#include <chrono>
#include <cmath>
#include <numeric>

#include "longform/common/error.h"
#include "longform/common/rng.h"
#include "longform/common/stats.h"
#include "longform/training/losses.h"

namespace longform::training {
namespace {

using Clock = std::chrono::steady_clock;

void CheckFinite(double loss, int epoch, size_t batch, double lr) {
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite training loss at epoch " +
                       std::to_string(epoch + 1) + ", batch " +
                       std::to_string(batch) + " (learning_rate=" +
                       std::to_string(lr) + ")");
  }
}

nn::WordTokenizer BuildTokenizer(const std::vector<std::string>& texts,
                                 const TrainConfig& config) {
  return nn::WordTokenizer::Build(texts, config.vocab_max_words,
                                  config.vocab_min_count, config.hash_buckets);
}

std::vector<std::vector<size_t>> Batches(std::vector<size_t> order,
                                         int batch_size, Rng& rng) {
  rng.Shuffle(order);
  std::vector<std::vector<size_t>> out;
  for (size_t i = 0; i < order.size(); i += batch_size) {
    out.emplace_back(order.begin() + i,
                     order.begin() + std::min(order.size(), i + batch_size));
  }
  return out;
}

// Forward pass over a batch of encoded inputs, keeping traces for backprop.
Eigen::MatrixXd ForwardBatch(const nn::TinyEncoder& encoder,
                             const std::vector<const nn::EncoderInput*>& inputs,
                             std::vector<nn::EncoderTrace>* traces) {
  Eigen::MatrixXd features(inputs.size(), encoder.dim());
  traces->resize(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    features.row(i) = encoder.Forward(*inputs[i], &(*traces)[i]);
  }
  return features;
}

class StepRunner {
 public:
  StepRunner(PairScorer* model, const TrainConfig& config)
      : model_(model),
        grads_(nn::EncoderWeights::Zeros(model->encoder().config())),
        head_w_grad_(model->head_weights().rows(), 1),
        head_b_grad_(1, 1),
        adam_(nn::AdamConfig{.learning_rate = config.learning_rate,
                             .weight_decay = config.weight_decay}) {
    params_ = model_->Tensors();
    grad_list_ = grads_.Tensors();
    grad_list_.emplace_back("head.weights", &head_w_grad_);
    grad_list_.emplace_back("head.bias", &head_b_grad_);
  }

  // Applies one Adam step given head gradients and per-row feature grads.
  void Apply(const HeadGradient& g, const std::vector<nn::EncoderTrace>& traces,
             bool update_encoder) {
    nn::ZeroTensors(grad_list_);
    head_w_grad_.col(0) = g.d_weights;
    head_b_grad_(0, 0) = g.d_bias;
    if (update_encoder) {
      for (size_t i = 0; i < traces.size(); ++i) {
        model_->encoder().Backward(traces[i], g.d_features.row(i), &grads_);
      }
    }
    adam_.Step(params_, grad_list_);
  }

 private:
  PairScorer* model_;
  nn::EncoderWeights grads_;
  nn::Matrix head_w_grad_;
  nn::Matrix head_b_grad_;
  nn::TensorList params_;
  nn::TensorList grad_list_;
  nn::Adam adam_;
};

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) {
    throw ConfigError("heldout_fraction must be in [0, 1)");
  }
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (vocab_max_words < 0 || vocab_min_count < 1 || hash_buckets < 0) {
    throw ConfigError("invalid tokenizer settings");
  }
}

Json ToJson(const TrainConfig& config) {
  return Json{{"learning_rate", config.learning_rate},
              {"batch_size", config.batch_size},
              {"epochs", config.epochs},
              {"heldout_fraction", config.heldout_fraction},
              {"seed", config.seed},
              {"freeze_encoder", config.freeze_encoder},
              {"weight_decay", config.weight_decay},
              {"vocab_max_words", config.vocab_max_words},
              {"vocab_min_count", config.vocab_min_count},
              {"hash_buckets", config.hash_buckets}};
}

Json ToJson(const TrainReport& report) {
  Json out{{"kind", ScorerKindName(report.kind)},
           {"train_size", report.train_size},
           {"heldout_size", report.heldout_size},
           {"epoch_train_loss", report.epoch_train_loss},
           {"has_heldout", report.has_heldout},
           {"seconds", report.seconds}};
  if (report.has_heldout) {
    out["heldout_loss"] = report.heldout_loss;
    if (report.kind == ScorerKind::kPrefBert) {
      out["heldout_mse"] = report.heldout_mse;
      out["heldout_spearman"] = report.heldout_spearman;
    } else {
      out["heldout_pairwise_accuracy"] = report.heldout_pairwise_accuracy;
    }
  }
  return out;
}

std::vector<double> FitMseHead(const Eigen::MatrixXd& features,
                               std::span<const double> targets,
                               const TrainConfig& config, nn::Matrix* weights,
                               nn::Matrix* bias) {
  config.Validate();
  const size_t n = static_cast<size_t>(features.rows());
  if (n == 0 || n != targets.size()) {
    throw ValidationError("FitMseHead: features/targets mismatch");
  }
  nn::Adam adam(nn::AdamConfig{.learning_rate = config.learning_rate,
                               .weight_decay = config.weight_decay});
  nn::Matrix w_grad(weights->rows(), 1), b_grad(1, 1);
  Rng rng(config.seed);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<double> losses;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    const auto batches = Batches(order, config.batch_size, rng);
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& batch = batches[bi];
      Eigen::MatrixXd f(batch.size(), features.cols());
      std::vector<double> y(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) {
        f.row(i) = features.row(batch[i]);
        y[i] = targets[batch[i]];
      }
      const HeadGradient g = MseHeadGradient(f, y, weights->col(0), (*bias)(0));
      CheckFinite(g.loss, epoch, bi, config.learning_rate);
      total += g.loss * static_cast<double>(batch.size());
      w_grad.col(0) = g.d_weights;
      b_grad(0, 0) = g.d_bias;
      adam.Step({{"w", weights}, {"b", bias}}, {{"w", &w_grad}, {"b", &b_grad}});
    }
    losses.push_back(total / static_cast<double>(n));
  }
  return losses;
}

TrainResult TrainPrefBert(const std::vector<LikertExample>& examples,
                          const nn::EncoderConfig& encoder_config,
                          const TrainConfig& config,
                          const EpochCallback& on_epoch) {
  config.Validate();
  if (examples.size() < 2) {
    throw ValidationError("train_prefbert needs at least 2 examples");
  }
  const auto start = Clock::now();
  const IndexSplit split =
      SplitIndices(examples.size(), config.heldout_fraction, config.seed);

  std::vector<std::string> texts;
  for (size_t i : split.train) {
    texts.push_back(examples[i].reference);
    texts.push_back(examples[i].generation);
  }
  Rng rng(config.seed);
  TrainResult result{PairScorer(ScorerKind::kPrefBert,
                                BuildTokenizer(texts, config), encoder_config,
                                rng.Fork()),
                     {}};
  PairScorer& model = result.model;
  TrainReport& report = result.report;
  report.kind = ScorerKind::kPrefBert;
  report.train_size = split.train.size();
  report.heldout_size = split.test.size();

  std::vector<PairInput> encoded(examples.size());
  std::vector<double> targets(examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    encoded[i] = model.Encode(examples[i].reference, examples[i].generation);
    targets[i] = NormalizeLikert(examples[i].gold_score);
  }

  if (config.freeze_encoder) {
    Eigen::MatrixXd features(split.train.size(), model.encoder().dim());
    std::vector<double> y;
    for (size_t i = 0; i < split.train.size(); ++i) {
      features.row(i) =
          model.encoder().Forward(encoded[split.train[i]].input, nullptr);
      y.push_back(targets[split.train[i]]);
    }
    TrainConfig head_config = config;
    head_config.seed = rng.Fork();
    report.epoch_train_loss = FitMseHead(
        features, y, head_config, &model.head_weights(), &model.head_bias());
    if (on_epoch) {
      for (size_t e = 0; e < report.epoch_train_loss.size(); ++e) {
        on_epoch(static_cast<int>(e), report.epoch_train_loss[e]);
      }
    }
  } else {
    StepRunner runner(&model, config);
    std::vector<nn::EncoderTrace> traces;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      double total = 0.0;
      const auto batches = Batches(split.train, config.batch_size, rng);
      for (size_t bi = 0; bi < batches.size(); ++bi) {
        std::vector<const nn::EncoderInput*> inputs;
        std::vector<double> y;
        for (size_t i : batches[bi]) {
          inputs.push_back(&encoded[i].input);
          y.push_back(targets[i]);
        }
        const Eigen::MatrixXd features =
            ForwardBatch(model.encoder(), inputs, &traces);
        const HeadGradient g =
            MseHeadGradient(features, y, model.head_weights().col(0),
                            model.head_bias()(0, 0));
        CheckFinite(g.loss, epoch, bi, config.learning_rate);
        total += g.loss * static_cast<double>(inputs.size());
        runner.Apply(g, traces, true);
      }
      report.epoch_train_loss.push_back(
          total / static_cast<double>(split.train.size()));
      if (on_epoch) on_epoch(epoch, report.epoch_train_loss.back());
    }
  }

  if (!split.test.empty()) {
    std::vector<double> predictions, y, gold;
    for (size_t i : split.test) {
      predictions.push_back(Sigmoid(model.RawFromFeatures(
          model.encoder().Forward(encoded[i].input, nullptr))));
      y.push_back(targets[i]);
      gold.push_back(examples[i].gold_score);
    }
    report.has_heldout = true;
    report.heldout_mse = MseLoss(predictions, y);
    report.heldout_loss = report.heldout_mse;
    report.heldout_spearman = SpearmanCorrelation(predictions, gold);
  }
  report.seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

TrainResult TrainGrm(const std::vector<PreferencePair>& pairs,
                     const nn::EncoderConfig& encoder_config,
                     const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (pairs.empty()) throw ValidationError("train_grm needs at least 1 pair");
  const auto start = Clock::now();
  const IndexSplit split =
      SplitIndices(pairs.size(), config.heldout_fraction, config.seed);

  std::vector<std::string> texts;
  for (size_t i : split.train) {
    texts.push_back(pairs[i].prompt);
    texts.push_back(pairs[i].chosen);
    texts.push_back(pairs[i].rejected);
  }
  Rng rng(config.seed);
  TrainResult result{PairScorer(ScorerKind::kGrm, BuildTokenizer(texts, config),
                                encoder_config, rng.Fork()),
                     {}};
  PairScorer& model = result.model;
  TrainReport& report = result.report;
  report.kind = ScorerKind::kGrm;
  report.train_size = split.train.size();
  report.heldout_size = split.test.size();

  std::vector<PairInput> chosen(pairs.size()), rejected(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    chosen[i] = model.Encode(pairs[i].prompt, pairs[i].chosen);
    rejected[i] = model.Encode(pairs[i].prompt, pairs[i].rejected);
  }

  StepRunner runner(&model, config);
  std::vector<nn::EncoderTrace> traces;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    const auto batches = Batches(split.train, config.batch_size, rng);
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const size_t n = batches[bi].size();
      std::vector<const nn::EncoderInput*> inputs;
      for (size_t i : batches[bi]) inputs.push_back(&chosen[i].input);
      for (size_t i : batches[bi]) inputs.push_back(&rejected[i].input);
      const Eigen::MatrixXd features =
          ForwardBatch(model.encoder(), inputs, &traces);
      const HeadGradient g = BtHeadGradient(
          features.topRows(n), features.bottomRows(n),
          model.head_weights().col(0), model.head_bias()(0, 0));
      CheckFinite(g.loss, epoch, bi, config.learning_rate);
      total += g.loss * static_cast<double>(n);
      runner.Apply(g, traces, !config.freeze_encoder);
    }
    report.epoch_train_loss.push_back(
        total / static_cast<double>(split.train.size()));
    if (on_epoch) on_epoch(epoch, report.epoch_train_loss.back());
  }

  if (!split.test.empty()) {
    double loss = 0.0;
    int correct = 0;
    for (size_t i : split.test) {
      const double rc = model.RawFromFeatures(
          model.encoder().Forward(chosen[i].input, nullptr));
      const double rr = model.RawFromFeatures(
          model.encoder().Forward(rejected[i].input, nullptr));
      loss += BtLoss(rc, rr);
      if (rc > rr) ++correct;
    }
    const double n = static_cast<double>(split.test.size());
    report.has_heldout = true;
    report.heldout_loss = loss / n;
    report.heldout_pairwise_accuracy = correct / n;
  }
  report.seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace longform::training
