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

#include "longform/grpo/policy.h"

#include <cmath>

#include "longform/common/error.h"
#include "longform/common/text.h"
#include "longform/corpus/corpus.h"

namespace longform::grpo {
namespace {

Eigen::VectorXd LogSoftmax(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  const double lse = max + std::log((logits.array() - max).exp().sum());
  return logits.array() - lse;
}

}  // namespace

Json ToJson(const ToyPolicyConfig& config) {
  return Json{{"vocabulary", config.vocabulary},
              {"max_tokens", config.max_tokens},
              {"prompt_slots", config.prompt_slots},
              {"init_scale", config.init_scale},
              {"seed", config.seed},
              {"beta1", config.beta1},
              {"beta2", config.beta2}};
}

ToyPolicyConfig ToyPolicyConfigFromJson(const Json& json) {
  ToyPolicyConfig c;
  c.vocabulary = json.at("vocabulary").get<int>();
  c.max_tokens = json.at("max_tokens").get<int>();
  c.prompt_slots = json.at("prompt_slots").get<int>();
  c.init_scale = json.at("init_scale").get<double>();
  c.seed = json.at("seed").get<uint64_t>();
  c.beta1 = json.at("beta1").get<double>();
  c.beta2 = json.at("beta2").get<double>();
  return c;
}

ToyPolicy::ToyPolicy(ToyPolicyConfig config) : config_(config) {
  if (config_.vocabulary < 1 || config_.max_tokens < 1 ||
      config_.prompt_slots < 0) {
    throw ConfigError("toy policy needs vocabulary >= 1, max_tokens >= 1 and "
                      "prompt_slots >= 0");
  }
  const int v = config_.vocabulary + 1;
  Rng rng(config_.seed);
  shared_ = nn::Matrix::Zero(config_.max_tokens, v);
  per_prompt_.assign(config_.prompt_slots,
                     nn::Matrix::Zero(config_.max_tokens, v));
  if (config_.init_scale > 0.0) {
    for (Eigen::Index i = 0; i < shared_.size(); ++i) {
      shared_(i) = config_.init_scale * rng.Normal();
    }
  }
  adam_ = std::make_unique<nn::Adam>(nn::AdamConfig{
      .learning_rate = 1e-3, .beta1 = config_.beta1, .beta2 = config_.beta2});
}

std::string ToyPolicy::SymbolName(int token) const {
  return "s" + std::to_string(token);
}

int ToyPolicy::Slot(std::string_view prompt) const {
  if (config_.prompt_slots == 0) return -1;
  return static_cast<int>(Fnv1a64(prompt) %
                          static_cast<uint64_t>(config_.prompt_slots));
}

Eigen::VectorXd ToyPolicy::Logits(int slot, int position) const {
  Eigen::VectorXd logits = shared_.row(position).transpose();
  if (slot >= 0) logits += per_prompt_[slot].row(position).transpose();
  return logits;
}

std::vector<SampledResponse> ToyPolicy::Sample(std::string_view prompt, int n,
                                               int max_tokens,
                                               double temperature,
                                               Rng& rng) const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  const int limit = std::min(max_tokens, config_.max_tokens);
  const int slot = Slot(prompt);
  std::vector<SampledResponse> out(n);
  for (SampledResponse& r : out) {
    for (int pos = 0; pos < limit; ++pos) {
      const Eigen::VectorXd logits = Logits(slot, pos);
      const Eigen::VectorXd logp = LogSoftmax(logits);
      const Eigen::VectorXd weights =
          temperature == 1.0 ? Eigen::VectorXd(logp.array().exp())
                             : Eigen::VectorXd(
                                   LogSoftmax(logits / temperature).array().exp());
      const int token = rng.Categorical(
          std::span<const double>(weights.data(), weights.size()));
      r.tokens.push_back(token);
      r.logprobs.push_back(logp[token]);
      if (token == eos()) break;
    }
    r.text = Render(r.tokens);
  }
  return out;
}

std::vector<double> ToyPolicy::LogProbs(std::string_view prompt,
                                        const std::vector<int>& tokens) const {
  if (static_cast<int>(tokens.size()) > config_.max_tokens) {
    throw ValidationError("sequence longer than the policy's max_tokens");
  }
  const int slot = Slot(prompt);
  std::vector<double> out;
  out.reserve(tokens.size());
  for (size_t pos = 0; pos < tokens.size(); ++pos) {
    if (tokens[pos] < 0 || tokens[pos] > eos()) {
      throw ValidationError("token out of range");
    }
    out.push_back(LogSoftmax(Logits(slot, static_cast<int>(pos)))[tokens[pos]]);
  }
  return out;
}

std::unique_ptr<Policy> ToyPolicy::Snapshot() const {
  auto copy = std::make_unique<ToyPolicy>(config_);
  copy->shared_ = shared_;
  copy->per_prompt_ = per_prompt_;
  return copy;
}

void ToyPolicy::ApplyGradient(const std::vector<SequenceGradient>& gradients,
                              double learning_rate) {
  const int v = config_.vocabulary + 1;
  nn::Matrix d_shared = nn::Matrix::Zero(config_.max_tokens, v);
  std::vector<nn::Matrix> d_prompt(per_prompt_.size(),
                                   nn::Matrix::Zero(config_.max_tokens, v));
  for (const SequenceGradient& g : gradients) {
    if (g.tokens.size() != g.d_logprobs.size() ||
        static_cast<int>(g.tokens.size()) > config_.max_tokens) {
      throw ValidationError("sequence gradient misaligned with tokens");
    }
    const int slot = Slot(g.prompt);
    for (size_t pos = 0; pos < g.tokens.size(); ++pos) {
      // d logp(token)/d logits = onehot(token) - softmax(logits).
      const Eigen::VectorXd p =
          LogSoftmax(Logits(slot, static_cast<int>(pos))).array().exp();
      Eigen::RowVectorXd d = -g.d_logprobs[pos] * p.transpose();
      d[g.tokens[pos]] += g.d_logprobs[pos];
      d_shared.row(pos) += d;
      if (slot >= 0) d_prompt[slot].row(pos) += d;
    }
  }
  // Adam minimizes, so hand it the negated ascent direction.
  nn::TensorList params = {{"shared", &shared_}};
  nn::TensorList grads = {{"shared", &d_shared}};
  d_shared = -d_shared;
  for (size_t s = 0; s < per_prompt_.size(); ++s) {
    d_prompt[s] = -d_prompt[s];
    params.emplace_back("slot" + std::to_string(s), &per_prompt_[s]);
    grads.emplace_back("slot" + std::to_string(s), &d_prompt[s]);
  }
  adam_->set_learning_rate(learning_rate);
  adam_->Step(params, grads);
}

std::vector<int> ToyPolicy::EncodeAnswer(std::string_view answer,
                                         int max_tokens) const {
  std::vector<int> tokens;
  for (std::string_view word : SplitWords(answer)) {
    int token = -1;
    if (word.size() > 1 && word[0] == 's') {
      try {
        size_t used = 0;
        const int parsed = std::stoi(std::string(word.substr(1)), &used);
        if (used == word.size() - 1) token = parsed;
      } catch (const std::exception&) {
      }
    }
    if (token < 0 || token >= config_.vocabulary) {
      throw ValidationError("answer", "'" + std::string(word) +
                                          "' is not a symbol of this policy");
    }
    tokens.push_back(token);
  }
  const int limit = std::min(max_tokens, config_.max_tokens);
  if (static_cast<int>(tokens.size()) < limit) {
    tokens.push_back(eos());
  } else {
    tokens.resize(limit);
  }
  return tokens;
}

std::string ToyPolicy::Render(const std::vector<int>& tokens) const {
  std::string body;
  for (int t : tokens) {
    if (t == eos()) break;
    if (!body.empty()) body += ' ';
    body += SymbolName(t);
  }
  return "<answer>" + body + "</answer>";
}

void ToyPolicy::Save(const std::filesystem::path& path) const {
  Json tables = Json::array();
  auto dump = [](const nn::Matrix& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
  };
  tables.push_back(dump(shared_));
  for (const auto& m : per_prompt_) tables.push_back(dump(m));
  WriteJsonFile(path, Json{{"kind", "toy"},
                           {"config", ToJson(config_)},
                           {"tables", tables}});
}

std::unique_ptr<ToyPolicy> ToyPolicy::Load(const std::filesystem::path& path) {
  const Json json = ReadJsonFile(path);
  try {
    if (json.at("kind") != "toy") throw ConfigError("not a toy policy file");
    auto policy =
        std::make_unique<ToyPolicy>(ToyPolicyConfigFromJson(json.at("config")));
    const Json& tables = json.at("tables");
    if (tables.size() != 1 + policy->per_prompt_.size()) {
      throw ConfigError("policy table count mismatch in " + path.string());
    }
    auto fill = [&](const Json& values, nn::Matrix* m) {
      const auto flat = values.get<std::vector<double>>();
      if (flat.size() != static_cast<size_t>(m->size())) {
        throw ConfigError("policy table shape mismatch in " + path.string());
      }
      std::copy(flat.begin(), flat.end(), m->data());
    };
    fill(tables[0], &policy->shared_);
    for (size_t s = 0; s < policy->per_prompt_.size(); ++s) {
      fill(tables[s + 1], &policy->per_prompt_[s]);
    }
    return policy;
  } catch (const Json::exception& e) {
    throw ConfigError("malformed policy file " + path.string() + ": " +
                      e.what());
  }
}

std::vector<double> ToyPolicy::Parameters() const {
  std::vector<double> out(shared_.data(), shared_.data() + shared_.size());
  for (const auto& m : per_prompt_) out.insert(out.end(), m.data(), m.data() + m.size());
  return out;
}

}  // namespace longform::grpo
