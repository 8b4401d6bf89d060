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

#include "longform/grpo/objective.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "longform/common/error.h"
#include "longform/common/stats.h"

namespace longform::grpo {
namespace {

struct RatioTerm {
  double value = 0.0;
  double d_ratio = 0.0;  // d(term)/d(ratio)
  bool clipped = false;
};

RatioTerm EvalTerm(double ratio, double advantage, double epsilon) {
  const double unclipped = ratio * advantage;
  const double clipped =
      std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  if (clipped < unclipped) return {clipped, 0.0, true};
  return {unclipped, advantage, false};
}

}  // namespace

void GrpoConfig::Validate() const {
  if (group_size < 2) throw ConfigError("grpo.group_size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw ConfigError("grpo.clip_epsilon must be in (0, 1)");
  }
  if (!(kl_beta >= 0.0)) throw ConfigError("grpo.kl_beta must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("grpo.learning_rate must be > 0");
  if (max_prompt_tokens < 1 || max_gen_tokens < 1) {
    throw ConfigError("grpo token budgets must be >= 1");
  }
  if (batch_size < 1) throw ConfigError("grpo.batch_size must be >= 1");
  if (!(advantage_std_floor > 0.0)) {
    throw ConfigError("grpo.advantage_std_floor must be > 0");
  }
  if (!(log_ratio_clamp > 0.0)) {
    throw ConfigError("grpo.log_ratio_clamp must be > 0");
  }
}

Json ToJson(const GrpoConfig& config) {
  return Json{{"group_size", config.group_size},
              {"clip_epsilon", config.clip_epsilon},
              {"kl_beta", config.kl_beta},
              {"learning_rate", config.learning_rate},
              {"max_prompt_tokens", config.max_prompt_tokens},
              {"max_gen_tokens", config.max_gen_tokens},
              {"batch_size", config.batch_size},
              {"advantage_std_floor", config.advantage_std_floor},
              {"token_level_ratio", config.token_level_ratio},
              {"log_ratio_clamp", config.log_ratio_clamp}};
}

Json ToJson(const Diagnostics& d) {
  return Json{{"mean_reward", d.mean_reward},
              {"mean_abs_advantage", d.mean_abs_advantage},
              {"clip_fraction", d.clip_fraction},
              {"kl", d.kl},
              {"mean_length_words", d.mean_length_words},
              {"mean_length_tokens", d.mean_length_tokens},
              {"clamped_ratios", d.clamped_ratios},
              {"responses", d.responses}};
}

std::vector<double> ComputeAdvantages(std::span<const double> rewards,
                                      double std_floor) {
  std::vector<double> out(rewards.size(), 0.0);
  if (rewards.empty()) return out;
  if (std::all_of(rewards.begin(), rewards.end(),
                  [&](double r) { return r == rewards[0]; })) {
    return out;
  }
  const double mean = Mean(rewards);
  const double sd = std::max(PopulationStd(rewards), std_floor);
  for (size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

double ClippedTerm(double ratio, double advantage, double epsilon) {
  return EvalTerm(ratio, advantage, epsilon).value;
}

double KlDivergence(std::span<const double> policy_logprobs,
                    std::span<const double> ref_logprobs) {
  if (policy_logprobs.size() != ref_logprobs.size()) {
    throw ValidationError("kl_divergence: token counts differ (" +
                          std::to_string(policy_logprobs.size()) + " vs " +
                          std::to_string(ref_logprobs.size()) + ")");
  }
  if (policy_logprobs.empty()) return 0.0;
  double total = 0.0;
  for (size_t t = 0; t < policy_logprobs.size(); ++t) {
    const double x = ref_logprobs[t] - policy_logprobs[t];
    total += std::expm1(x) - x;
  }
  return total / static_cast<double>(policy_logprobs.size());
}

ObjectiveResult GrpoObjective(
    const std::vector<GenerationGroup>& groups,
    const std::vector<std::vector<std::vector<double>>>& new_logprobs,
    const std::vector<std::vector<std::vector<double>>>& ref_logprobs,
    const GrpoConfig& config) {
  if (new_logprobs.size() != groups.size() ||
      ref_logprobs.size() != groups.size()) {
    throw ValidationError("grpo_objective: log-prob groups misaligned");
  }
  size_t total_responses = 0;
  for (size_t g = 0; g < groups.size(); ++g) {
    const GenerationGroup& group = groups[g];
    const size_t n = group.responses.size();
    if (group.old_logprobs.size() != n || group.advantages.size() != n ||
        group.rewards.size() != n || new_logprobs[g].size() != n ||
        ref_logprobs[g].size() != n) {
      throw ValidationError("grpo_objective: group " + group.prompt_id +
                            " has misaligned fields");
    }
    for (size_t i = 0; i < n; ++i) {
      const size_t t = group.old_logprobs[i].size();
      if (new_logprobs[g][i].size() != t || ref_logprobs[g][i].size() != t) {
        throw ValidationError("grpo_objective: token counts differ in group " +
                              group.prompt_id);
      }
    }
    total_responses += n;
  }

  ObjectiveResult result;
  Diagnostics& diag = result.diagnostics;
  diag.responses = static_cast<int>(total_responses);
  if (total_responses == 0) return result;
  const double inv_n = 1.0 / static_cast<double>(total_responses);
  const double eps = config.clip_epsilon;
  const double clamp = config.log_ratio_clamp;

  double surrogate = 0.0, kl_total = 0.0;
  int length_count = 0;
  double clip_units = 0.0;
  result.gradient.resize(groups.size());
  for (size_t g = 0; g < groups.size(); ++g) {
    const GenerationGroup& group = groups[g];
    result.gradient[g].resize(group.responses.size());
    for (size_t i = 0; i < group.responses.size(); ++i) {
      const auto& old_lp = group.old_logprobs[i];
      const auto& new_lp = new_logprobs[g][i];
      const auto& ref_lp = ref_logprobs[g][i];
      const double adv = group.advantages[i];
      const size_t len = old_lp.size();
      std::vector<double>& grad = result.gradient[g][i];
      grad.assign(len, 0.0);

      if (config.token_level_ratio && len > 0) {
        double term = 0.0;
        int clipped_tokens = 0;
        for (size_t t = 0; t < len; ++t) {
          double log_ratio = new_lp[t] - old_lp[t];
          bool clamped = false;
          if (std::abs(log_ratio) > clamp) {
            log_ratio = std::copysign(clamp, log_ratio);
            clamped = true;
            ++diag.clamped_ratios;
          }
          const double ratio = std::exp(log_ratio);
          const RatioTerm rt = EvalTerm(ratio, adv, eps);
          term += rt.value;
          if (rt.clipped) ++clipped_tokens;
          if (!clamped) grad[t] += inv_n * rt.d_ratio * ratio / len;
        }
        surrogate += term / len;
        clip_units += static_cast<double>(clipped_tokens) / len;
      } else {
        double log_ratio = 0.0;
        for (size_t t = 0; t < len; ++t) log_ratio += new_lp[t] - old_lp[t];
        bool clamped = false;
        if (std::abs(log_ratio) > clamp) {
          log_ratio = std::copysign(clamp, log_ratio);
          clamped = true;
          ++diag.clamped_ratios;
        }
        const double ratio = std::exp(log_ratio);
        const RatioTerm rt = EvalTerm(ratio, adv, eps);
        surrogate += rt.value;
        if (rt.clipped) clip_units += 1.0;
        if (!clamped) {
          for (size_t t = 0; t < len; ++t) grad[t] += inv_n * rt.d_ratio * ratio;
        }
      }

      const double kl = KlDivergence(new_lp, ref_lp);
      kl_total += kl;
      if (len > 0 && config.kl_beta > 0.0) {
        const double scale = config.kl_beta * inv_n / static_cast<double>(len);
        for (size_t t = 0; t < len; ++t) {
          grad[t] -= scale * (1.0 - std::exp(ref_lp[t] - new_lp[t]));
        }
      }

      diag.mean_reward += group.rewards[i];
      diag.mean_abs_advantage += std::abs(adv);
      diag.mean_length_tokens += static_cast<double>(len);
      if (i < group.lengths_words.size()) {
        diag.mean_length_words += group.lengths_words[i];
        ++length_count;
      }
    }
  }
  diag.kl = kl_total * inv_n;
  diag.mean_reward *= inv_n;
  diag.mean_abs_advantage *= inv_n;
  diag.mean_length_tokens *= inv_n;
  diag.clip_fraction = clip_units * inv_n;
  if (length_count > 0) diag.mean_length_words /= length_count;
  result.objective = surrogate * inv_n - config.kl_beta * diag.kl;
  return result;
}

}  // namespace longform::grpo
