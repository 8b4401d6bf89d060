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

#include "longform/eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "longform/common/error.h"
#include "longform/common/patterns.h"
#include "longform/common/text.h"

namespace longform::eval {
namespace {

// True when every node reaches every other along edges i -> j with
// wins[i][j] > 0.
bool StronglyConnected(const std::vector<std::vector<double>>& wins) {
  const size_t m = wins.size();
  for (bool forward : {true, false}) {
    std::vector<bool> seen(m, false);
    std::vector<size_t> stack = {0};
    seen[0] = true;
    while (!stack.empty()) {
      const size_t i = stack.back();
      stack.pop_back();
      for (size_t j = 0; j < m; ++j) {
        const double w = forward ? wins[i][j] : wins[j][i];
        if (!seen[j] && w > 0.0) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

}  // namespace

LikertAggregate AggregateLikert(const std::vector<JudgeVerdict>& verdicts,
                                int threshold) {
  struct Tally {
    int n = 0, unparsed = 0, successes = 0;
    long sum = 0;
  };
  std::map<std::string, Tally> tallies;
  for (const JudgeVerdict& v : verdicts) {
    Tally& t = tallies[v.model_id];
    if (!v.parse_ok || !v.rating) {
      ++t.unparsed;
      continue;
    }
    ++t.n;
    t.sum += *v.rating;
    if (*v.rating >= threshold) ++t.successes;
  }
  LikertAggregate out;
  for (const auto& [model, t] : tallies) {
    if (t.n == 0) {
      spdlog::warn("model {} has no parseable verdicts; omitted", model);
      out.omitted.push_back(model);
      continue;
    }
    LikertSummary& s = out.models[model];
    s.n = t.n;
    s.unparsed = t.unparsed;
    s.mean_likert = static_cast<double>(t.sum) / t.n;
    s.success_rate_pct = 100.0 * t.successes / t.n;
  }
  return out;
}

std::string_view OutcomeName(Outcome outcome) {
  switch (outcome) {
    case Outcome::kAWins:
      return "a_wins";
    case Outcome::kBWins:
      return "b_wins";
    case Outcome::kTie:
      return "tie";
  }
  return "tie";
}

std::vector<PairwiseComparison> DerivePairwise(const RatingTable& ratings) {
  std::vector<PairwiseComparison> out;
  auto it = ratings.begin();
  while (it != ratings.end()) {
    const std::string& prompt = it->first.first;
    std::vector<std::pair<std::string, int>> rated;
    for (; it != ratings.end() && it->first.first == prompt; ++it) {
      rated.emplace_back(it->first.second, it->second);
    }
    for (size_t a = 0; a < rated.size(); ++a) {
      for (size_t b = a + 1; b < rated.size(); ++b) {
        PairwiseComparison c{prompt, rated[a].first, rated[b].first};
        if (rated[a].second > rated[b].second) {
          c.outcome = Outcome::kAWins;
        } else if (rated[a].second < rated[b].second) {
          c.outcome = Outcome::kBWins;
        }
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

RatingTable RatingsFromVerdicts(const std::vector<JudgeVerdict>& verdicts) {
  RatingTable table;
  for (const JudgeVerdict& v : verdicts) {
    if (!v.parse_ok || !v.rating) continue;
    const std::string key = v.dataset + "/" + v.prompt_id + "/" + v.rater;
    if (!table.emplace(std::make_pair(key, v.model_id), *v.rating).second) {
      throw ValidationError("verdicts", "duplicate rating for model " +
                                            v.model_id + " on " + key);
    }
  }
  return table;
}

Json ToJson(const BtOptions& options) {
  return {{"tie_weight", options.tie_weight},
          {"smoothing", options.smoothing},
          {"tolerance", options.tolerance},
          {"max_iterations", options.max_iterations}};
}

BtRating FitBradleyTerry(const std::vector<PairwiseComparison>& comparisons,
                         const BtOptions& options) {
  if (options.tie_weight < 0.0 || options.tie_weight > 1.0) {
    throw ValidationError("tie_weight", "must be in [0, 1]");
  }
  if (options.smoothing < 0.0) {
    throw ValidationError("smoothing", "must be >= 0");
  }
  std::set<std::string> names;
  for (const PairwiseComparison& c : comparisons) {
    if (c.model_a == c.model_b) {
      throw ValidationError("comparisons", "model compared with itself: " +
                                               c.model_a);
    }
    names.insert(c.model_a);
    names.insert(c.model_b);
  }
  if (names.size() < 2) {
    throw ValidationError("comparisons", "need at least two models");
  }
  const std::vector<std::string> models(names.begin(), names.end());
  const size_t m = models.size();
  auto index = [&](const std::string& name) {
    return static_cast<size_t>(
        std::lower_bound(models.begin(), models.end(), name) - models.begin());
  };

  std::vector<std::vector<double>> wins(m, std::vector<double>(m, 0.0));
  for (const PairwiseComparison& c : comparisons) {
    const size_t a = index(c.model_a);
    const size_t b = index(c.model_b);
    switch (c.outcome) {
      case Outcome::kAWins:
        wins[a][b] += 1.0;
        break;
      case Outcome::kBWins:
        wins[b][a] += 1.0;
        break;
      case Outcome::kTie:
        wins[a][b] += options.tie_weight;
        wins[b][a] += options.tie_weight;
        break;
    }
  }
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < m; ++j) {
      if (i != j) wins[i][j] += options.smoothing;
    }
  }
  if (!StronglyConnected(wins)) {
    throw ConvergenceError(
        "Bradley-Terry likelihood has no finite maximum: some model never "
        "beats the rest (use smoothing > 0)");
  }

  std::vector<double> total_wins(m, 0.0);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < m; ++j) total_wins[i] += wins[i][j];
  }
  std::vector<double> w(m, 1.0 / m), next(m);
  double change = 0.0;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    for (size_t i = 0; i < m; ++i) {
      double denom = 0.0;
      for (size_t j = 0; j < m; ++j) {
        const double games = wins[i][j] + wins[j][i];
        if (j != i && games > 0.0) denom += games / (w[i] + w[j]);
      }
      next[i] = total_wins[i] / denom;
    }
    double sum = 0.0;
    for (double v : next) sum += v;
    change = 0.0;
    for (size_t i = 0; i < m; ++i) {
      next[i] /= sum;
      change = std::max(change, std::abs(next[i] - w[i]) / w[i]);
    }
    w.swap(next);
    if (change < options.tolerance) {
      BtRating rating;
      rating.iterations = iter;
      for (size_t i = 0; i < m; ++i) {
        rating.strengths[models[i]] = w[i];
        rating.win_rate_pct[models[i]] = 100.0 * w[i];
      }
      return rating;
    }
  }
  throw ConvergenceError("Bradley-Terry fit did not converge after " +
                         std::to_string(options.max_iterations) +
                         " iterations (last relative change " +
                         std::to_string(change) + ")");
}

double RepetitionRate(std::string_view text) {
  const std::string lower = ToLower(text);
  const std::vector<std::string_view> tokens = SplitWords(lower);
  if (tokens.size() < 3) return 0.0;
  const size_t total = tokens.size() - 1;
  std::set<std::pair<std::string_view, std::string_view>> distinct;
  for (size_t i = 0; i < total; ++i) distinct.emplace(tokens[i], tokens[i + 1]);
  return 100.0 * static_cast<double>(total - distinct.size()) / total;
}

bool MarkdownCheck(std::string_view text) {
  for (bool hit : MatchMarkdownPatterns(text)) {
    if (hit) return true;
  }
  return false;
}

std::map<std::string, SurfaceSummary> SummarizeSurface(
    const std::vector<std::pair<std::string, std::string>>& responses) {
  std::map<std::string, SurfaceSummary> out;
  for (const auto& [model, text] : responses) {
    SurfaceSummary& s = out[model];
    ++s.n;
    s.mean_words += WordCount(text);
    s.mean_repetition_pct += RepetitionRate(text);
    s.markdown_pct += MarkdownCheck(text) ? 100.0 : 0.0;
  }
  for (auto& [model, s] : out) {
    s.mean_words /= s.n;
    s.mean_repetition_pct /= s.n;
    s.markdown_pct /= s.n;
  }
  return out;
}

}  // namespace longform::eval
