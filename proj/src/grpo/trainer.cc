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

#include "longform/grpo/trainer.h"

#include <cmath>
#include <numeric>

#include "longform/common/error.h"
#include "longform/common/stats.h"
#include "longform/common/text.h"

namespace longform::grpo {
namespace {

constexpr int kMaxConsecutiveSkips = 3;

// Keeps the first `max_words` whitespace-delimited words.
std::string TruncateWords(const std::string& text, int max_words) {
  const auto words = SplitWords(text);
  if (static_cast<int>(words.size()) <= max_words) return text;
  const char* end = words[max_words - 1].data() + words[max_words - 1].size();
  return std::string(text.data(), end);
}

bool AllFinite(const std::vector<SequenceGradient>& grads) {
  for (const auto& g : grads) {
    for (double v : g.d_logprobs) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

// Cycles through a fresh seeded permutation of the prompt indices.
class PromptStream {
 public:
  PromptStream(size_t n, Rng& rng) : order_(n), rng_(rng) {
    std::iota(order_.begin(), order_.end(), size_t{0});
    rng_.Shuffle(order_);
  }
  size_t Next() {
    if (pos_ == order_.size()) {
      rng_.Shuffle(order_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<size_t> order_;
  Rng& rng_;
  size_t pos_ = 0;
};

}  // namespace

Json ToJson(const CurvePoint& p) {
  Json out{{"step", p.step},
           {"mean_reward", p.mean_reward},
           {"mean_length_words", p.mean_length_words},
           {"kl", p.kl},
           {"clip_fraction", p.clip_fraction},
           {"objective", p.objective}};
  if (p.skipped) out["skipped"] = true;
  return out;
}

GrpoRunResult GrpoTrain(Policy& policy,
                        const std::vector<corpus::PromptRecord>& prompts,
                        const reward::RewardSignal& signal,
                        const GrpoRunConfig& config) {
  config.grpo.Validate();
  if (prompts.empty()) throw ValidationError("grpo_train: empty prompt set");
  if (config.steps < 0) throw ConfigError("grpo steps must be >= 0");
  const GrpoConfig& gc = config.grpo;
  const std::unique_ptr<Policy> reference = policy.Snapshot();
  Rng rng(config.seed);
  PromptStream stream(prompts.size(), rng);
  if (config.curve_path) {
    std::filesystem::remove(*config.curve_path);
  }

  GrpoRunResult result;
  int consecutive_skips = 0;
  for (int step = 1; step <= config.steps; ++step) {
    std::vector<GenerationGroup> groups;
    std::vector<std::string> rendered;
    std::vector<std::vector<std::vector<int>>> tokens;
    for (int b = 0; b < gc.batch_size; ++b) {
      const corpus::PromptRecord& record = prompts[stream.Next()];
      const std::string prompt = TruncateWords(
          corpus::RenderTrainingPrompt(record.instruction),
          gc.max_prompt_tokens);
      std::vector<SampledResponse> samples = policy.Sample(
          prompt, gc.group_size, gc.max_gen_tokens, config.temperature, rng);
      GenerationGroup group;
      group.prompt_id = record.id;
      std::vector<std::vector<int>> group_tokens;
      for (SampledResponse& s : samples) {
        group.responses.push_back(s.text);
        group.old_logprobs.push_back(std::move(s.logprobs));
        group.lengths_words.push_back(
            WordCount(corpus::ExtractAnswer(s.text).answer));
        group_tokens.push_back(std::move(s.tokens));
      }
      std::vector<reward::RewardValue> values;
      try {
        values = reward::ScoreGroup(signal, record.instruction,
                                    record.reference, group.responses,
                                    config.format_gate);
      } catch (const Error& e) {
        throw Error("reward signal " + std::string(signal.name()) +
                    " failed at step " + std::to_string(step) + " on prompt " +
                    record.id + ": " + e.what());
      }
      for (const auto& v : values) group.rewards.push_back(v.value);
      group.advantages =
          ComputeAdvantages(group.rewards, gc.advantage_std_floor);
      groups.push_back(std::move(group));
      rendered.push_back(prompt);
      tokens.push_back(std::move(group_tokens));
    }

    std::vector<std::vector<std::vector<double>>> new_lp(groups.size()),
        ref_lp(groups.size());
    for (size_t g = 0; g < groups.size(); ++g) {
      for (const auto& seq : tokens[g]) {
        new_lp[g].push_back(policy.LogProbs(rendered[g], seq));
        ref_lp[g].push_back(reference->LogProbs(rendered[g], seq));
      }
    }
    const ObjectiveResult objective = GrpoObjective(groups, new_lp, ref_lp, gc);

    std::vector<SequenceGradient> grads;
    for (size_t g = 0; g < groups.size(); ++g) {
      for (size_t i = 0; i < tokens[g].size(); ++i) {
        grads.push_back({rendered[g], tokens[g][i], objective.gradient[g][i]});
      }
    }
    CurvePoint point;
    point.step = step;
    point.mean_reward = objective.diagnostics.mean_reward;
    point.mean_length_words = objective.diagnostics.mean_length_words;
    point.kl = objective.diagnostics.kl;
    point.clip_fraction = objective.diagnostics.clip_fraction;
    point.objective = objective.objective;
    if (!AllFinite(grads) || !std::isfinite(objective.objective)) {
      point.skipped = true;
      ++result.skipped_updates;
      if (++consecutive_skips >= kMaxConsecutiveSkips) {
        throw NumericError("non-finite GRPO gradient on " +
                           std::to_string(kMaxConsecutiveSkips) +
                           " consecutive steps (last step " +
                           std::to_string(step) + ")");
      }
    } else {
      consecutive_skips = 0;
      policy.ApplyGradient(grads, gc.learning_rate);
    }
    result.curve.push_back(point);
    if (config.curve_path) AppendJsonl(*config.curve_path, ToJson(point));
  }
  return result;
}

void SftConfig::Validate() const {
  if (epochs < 0) throw ConfigError("sft.epochs must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("sft.learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("sft.batch_size must be >= 1");
  if (max_tokens < 1) throw ConfigError("sft.max_tokens must be >= 1");
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) {
    throw ConfigError("sft.heldout_fraction must be in [0, 1)");
  }
}

Json ToJson(const SftConfig& c) {
  return Json{{"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"max_tokens", c.max_tokens},
              {"heldout_fraction", c.heldout_fraction},
              {"seed", c.seed}};
}

Json ToJson(const SftReport& r) {
  Json out{{"epoch_train_loss", r.epoch_train_loss},
           {"train_size", r.train_size},
           {"heldout_size", r.heldout_size},
           {"has_heldout", r.has_heldout}};
  if (r.has_heldout) out["epoch_heldout_loss"] = r.epoch_heldout_loss;
  return out;
}

double SequenceNll(const Policy& policy,
                   const std::vector<corpus::PromptRecord>& records,
                   int max_tokens) {
  double total = 0.0;
  size_t count = 0;
  for (const auto& r : records) {
    const std::string prompt = corpus::RenderTrainingPrompt(r.instruction);
    const auto tokens = policy.EncodeAnswer(r.reference, max_tokens);
    for (double lp : policy.LogProbs(prompt, tokens)) {
      total -= lp;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

SftReport SftTrain(Policy& policy,
                   const std::vector<corpus::PromptRecord>& records,
                   const SftConfig& config) {
  config.Validate();
  if (records.empty()) throw ValidationError("sft_train: empty corpus");
  for (const auto& r : records) {
    if (Trim(r.reference).empty()) {
      throw ValidationError("reference", "record " + r.id +
                                             " has an empty reference");
    }
  }
  const IndexSplit split =
      SplitIndices(records.size(), config.heldout_fraction, config.seed);
  std::vector<corpus::PromptRecord> train, heldout;
  for (size_t i : split.train) train.push_back(records[i]);
  for (size_t i : split.test) heldout.push_back(records[i]);

  SftReport report;
  report.train_size = train.size();
  report.heldout_size = heldout.size();
  report.has_heldout = !heldout.empty();
  Rng rng(config.seed);
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.Shuffle(order);
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<SequenceGradient> grads;
      for (size_t k = start; k < end; ++k) {
        const auto& r = train[order[k]];
        SequenceGradient g;
        g.prompt = corpus::RenderTrainingPrompt(r.instruction);
        g.tokens = policy.EncodeAnswer(r.reference, config.max_tokens);
        // Mean token log-likelihood per sequence, averaged over the batch.
        const double w = 1.0 / (static_cast<double>(g.tokens.size()) *
                                static_cast<double>(end - start));
        g.d_logprobs.assign(g.tokens.size(), w);
        grads.push_back(std::move(g));
      }
      policy.ApplyGradient(grads, config.learning_rate);
    }
    const double loss = SequenceNll(policy, train, config.max_tokens);
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite SFT loss at epoch " +
                         std::to_string(epoch + 1));
    }
    report.epoch_train_loss.push_back(loss);
    if (report.has_heldout) {
      report.epoch_heldout_loss.push_back(
          SequenceNll(policy, heldout, config.max_tokens));
    }
  }
  return report;
}

}  // namespace longform::grpo
