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

#include "longform/reward/signals.h"

#include <algorithm>
#include <cmath>

#include "longform/common/error.h"
#include "longform/common/rng.h"
#include "longform/common/text.h"
#include "longform/corpus/corpus.h"

namespace longform::reward {
namespace {

int LcsLength(const std::vector<std::string>& a,
              const std::vector<std::string>& b) {
  std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::shared_ptr<const training::PairScorer> RequireModel(
    std::shared_ptr<const training::PairScorer> model,
    training::ScorerKind kind) {
  if (!model) {
    throw ConfigError(std::string(training::ScorerKindName(kind)) +
                      " signal needs a loaded model");
  }
  if (model->kind() != kind) {
    throw ConfigError("model at hand is a " +
                      std::string(training::ScorerKindName(model->kind())) +
                      " model, expected " +
                      std::string(training::ScorerKindName(kind)));
  }
  return model;
}

SignalScore FromPair(const training::PairScorer& model, std::string_view first,
                     std::string_view second) {
  training::PairInput encoded;
  SignalScore out;
  out.value = model.Score(first, second, &encoded);
  out.truncated = encoded.truncated;
  out.degenerate = encoded.degenerate;
  return out;
}

}  // namespace

double RougeL(std::string_view reference, std::string_view generation) {
  const std::vector<std::string> ref = NormalizedTokens(reference);
  const std::vector<std::string> gen = NormalizedTokens(generation);
  if (ref.empty() || gen.empty()) return 0.0;
  const int lcs = LcsLength(ref, gen);
  if (lcs == 0) return 0.0;
  const double precision = static_cast<double>(lcs) / gen.size();
  const double recall = static_cast<double>(lcs) / ref.size();
  return 2.0 * precision * recall / (precision + recall);
}

HashedEmbeddingProvider::HashedEmbeddingProvider(int dim, double context_weight,
                                                 uint64_t seed)
    : dim_(dim), context_weight_(context_weight), seed_(seed) {
  if (dim_ < 1) throw ConfigError("embedding dim must be >= 1");
  if (context_weight_ < 0.0) throw ConfigError("context_weight must be >= 0");
}

Eigen::VectorXd HashedEmbeddingProvider::TokenVector(
    const std::string& token) const {
  Rng rng(Fnv1a64(token) ^ seed_);
  Eigen::VectorXd v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = rng.Normal();
  return v.normalized();
}

std::vector<TokenEmbedding> HashedEmbeddingProvider::EmbedTokens(
    std::string_view text) const {
  const std::vector<std::string> tokens = NormalizedTokens(text);
  std::vector<Eigen::VectorXd> base;
  for (const std::string& t : tokens) base.push_back(TokenVector(t));
  std::vector<TokenEmbedding> out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    Eigen::VectorXd v = base[i];
    if (i > 0) v += context_weight_ * base[i - 1];
    if (i + 1 < tokens.size()) v += context_weight_ * base[i + 1];
    const double norm = v.norm();
    out.push_back({tokens[i], norm > 0 ? Eigen::VectorXd(v / norm) : base[i]});
  }
  return out;
}

EncoderEmbeddingProvider::EncoderEmbeddingProvider(
    std::shared_ptr<const training::PairScorer> model)
    : model_(std::move(model)) {
  if (!model_) throw ConfigError("embedding provider needs a loaded encoder");
}

std::vector<TokenEmbedding> EncoderEmbeddingProvider::EmbedTokens(
    std::string_view text) const {
  std::vector<std::string> tokens = NormalizedTokens(text);
  if (tokens.empty()) return {};
  const size_t budget =
      static_cast<size_t>(model_->encoder().config().max_length) - 1;
  if (tokens.size() > budget) tokens.resize(budget);
  std::vector<int> ids = model_->tokenizer().Encode(text);
  ids.resize(tokens.size());
  nn::EncoderInput input;
  input.ids.push_back(nn::WordTokenizer::kCls);
  input.ids.insert(input.ids.end(), ids.begin(), ids.end());
  input.segments.assign(input.ids.size(), 0);
  const nn::Matrix states = model_->encoder().TokenStates(input);
  std::vector<TokenEmbedding> out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    Eigen::VectorXd v = states.row(i + 1).transpose();
    const double norm = v.norm();
    if (norm > 0) v /= norm;
    out.push_back({tokens[i], std::move(v)});
  }
  return out;
}

double EmbedSimilarity(std::string_view reference, std::string_view generation,
                       const EmbeddingProvider& provider, bool* degenerate) {
  const auto ref = provider.EmbedTokens(reference);
  const auto gen = provider.EmbedTokens(generation);
  if (degenerate) *degenerate = ref.empty() || gen.empty();
  if (ref.empty() || gen.empty()) return 0.0;
  Eigen::MatrixXd sim(gen.size(), ref.size());
  for (size_t i = 0; i < gen.size(); ++i) {
    for (size_t j = 0; j < ref.size(); ++j) {
      sim(i, j) = std::clamp(gen[i].vector.dot(ref[j].vector), 0.0, 1.0);
    }
  }
  const double precision = sim.rowwise().maxCoeff().mean();
  const double recall = sim.colwise().maxCoeff().mean();
  if (precision + recall <= 0.0) return 0.0;
  return std::clamp(2.0 * precision * recall / (precision + recall), 0.0, 1.0);
}

SignalScore RougeLSignal::Score(const RewardRequest& request) const {
  SignalScore out;
  out.value = RougeL(request.reference, request.generation);
  out.degenerate = Trim(request.reference).empty() ||
                   Trim(request.generation).empty();
  return out;
}

EmbedSimSignal::EmbedSimSignal(
    std::shared_ptr<const EmbeddingProvider> provider)
    : provider_(std::move(provider)) {
  if (!provider_) throw ConfigError("embed_sim signal needs a provider");
}

SignalScore EmbedSimSignal::Score(const RewardRequest& request) const {
  SignalScore out;
  out.value = EmbedSimilarity(request.reference, request.generation,
                              *provider_, &out.degenerate);
  return out;
}

GrmSignal::GrmSignal(std::shared_ptr<const training::PairScorer> model)
    : model_(RequireModel(std::move(model), training::ScorerKind::kGrm)) {}

SignalScore GrmSignal::Score(const RewardRequest& request) const {
  return FromPair(*model_, request.prompt, request.generation);
}

PrefBertSignal::PrefBertSignal(
    std::shared_ptr<const training::PairScorer> model)
    : model_(RequireModel(std::move(model), training::ScorerKind::kPrefBert)) {}

SignalScore PrefBertSignal::Score(const RewardRequest& request) const {
  return FromPair(*model_, request.reference, request.generation);
}

TargetLengthSignal::TargetLengthSignal(int target_words)
    : target_words_(target_words) {
  if (target_words_ < 1) throw ConfigError("target_words must be >= 1");
}

SignalScore TargetLengthSignal::Score(const RewardRequest& request) const {
  const int words = WordCount(request.generation);
  SignalScore out;
  out.value = std::max(
      0.0, 1.0 - std::abs(words - target_words_) /
                     static_cast<double>(target_words_));
  out.degenerate = words == 0;
  return out;
}

LengthSignal::LengthSignal(int cap_words) : cap_words_(cap_words) {
  if (cap_words_ < 1) throw ConfigError("length_cap_words must be >= 1");
}

SignalScore LengthSignal::Score(const RewardRequest& request) const {
  const int words = WordCount(request.generation);
  SignalScore out;
  out.value = std::min(words, cap_words_) / static_cast<double>(cap_words_);
  out.degenerate = words == 0;
  return out;
}

std::unique_ptr<RewardSignal> MakeSignal(const SignalConfig& config) {
  const std::string& name = config.name;
  if (name == "rouge_l") return std::make_unique<RougeLSignal>();
  if (name == "target_length") {
    return std::make_unique<TargetLengthSignal>(config.target_words);
  }
  if (name == "length") {
    return std::make_unique<LengthSignal>(config.length_cap_words);
  }
  if (name == "embed_sim") {
    if (config.model_path.empty()) {
      return std::make_unique<EmbedSimSignal>(
          std::make_shared<HashedEmbeddingProvider>(config.embedding_dim));
    }
    return std::make_unique<EmbedSimSignal>(
        std::make_shared<EncoderEmbeddingProvider>(
            std::make_shared<training::PairScorer>(
                training::PairScorer::Load(config.model_path))));
  }
  if (name == "grm" || name == "prefbert") {
    if (config.model_path.empty()) {
      throw ConfigError("reward.signal=" + name +
                        " requires reward.model_path");
    }
    auto model = std::make_shared<training::PairScorer>(
        training::PairScorer::Load(config.model_path));
    if (name == "grm") return std::make_unique<GrmSignal>(std::move(model));
    return std::make_unique<PrefBertSignal>(std::move(model));
  }
  throw ConfigError("unknown reward signal '" + name +
                    "' (expected rouge_l, embed_sim, grm, prefbert, "
                    "target_length or length)");
}

std::vector<RewardValue> ScoreGroup(const RewardSignal& signal,
                                    std::string_view prompt,
                                    std::string_view reference,
                                    const std::vector<std::string>& responses,
                                    bool format_gate) {
  if (responses.empty()) {
    throw ValidationError("responses", "score_group needs at least 1 response");
  }
  std::vector<RewardValue> out;
  out.reserve(responses.size());
  for (const std::string& raw : responses) {
    const corpus::ExtractedAnswer extracted = corpus::ExtractAnswer(raw);
    RewardValue value;
    value.signal_name = std::string(signal.name());
    value.format_ok = extracted.well_formed;
    if (!format_gate || extracted.well_formed) {
      const SignalScore s = signal.Score(
          {std::string(prompt), std::string(reference), extracted.answer});
      value.value = s.value;
      value.truncated = s.truncated;
      value.degenerate = s.degenerate;
    }
    out.push_back(std::move(value));
  }
  return out;
}

}  // namespace longform::reward
