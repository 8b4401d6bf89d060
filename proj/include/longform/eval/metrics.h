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

// Likert aggregation, Likert-derived pairwise comparisons, Bradley-Terry
// fitting and surface statistics of responses.

#ifndef LONGFORM_EVAL_METRICS_H_
#define LONGFORM_EVAL_METRICS_H_

#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "longform/common/jsonl.h"
#include "longform/eval/judge.h"

namespace longform::eval {

struct LikertSummary {
  int n = 0;         // parseable verdicts
  int unparsed = 0;  // excluded from n
  double mean_likert = 0.0;
  double success_rate_pct = 0.0;
};

struct LikertAggregate {
  std::map<std::string, LikertSummary> models;
  std::vector<std::string> omitted;  // models with no parseable verdict
};

LikertAggregate AggregateLikert(const std::vector<JudgeVerdict>& verdicts,
                                int threshold = 4);

enum class Outcome { kAWins, kBWins, kTie };

std::string_view OutcomeName(Outcome outcome);

struct PairwiseComparison {
  std::string prompt_id;
  std::string model_a;
  std::string model_b;
  Outcome outcome = Outcome::kTie;
};

// Key: (prompt key, model). The prompt key is any string that identifies one
// rating occasion, e.g. prompt id plus rater.
using RatingTable = std::map<std::pair<std::string, std::string>, int>;

// One comparison per prompt and unordered model pair with both ratings,
// model_a < model_b lexicographically.
std::vector<PairwiseComparison> DerivePairwise(const RatingTable& ratings);

// Builds the rating table from parseable verdicts, keyed by
// "<dataset>/<prompt_id>/<rater>". Throws ValidationError on a duplicate key.
RatingTable RatingsFromVerdicts(const std::vector<JudgeVerdict>& verdicts);

struct BtOptions {
  double tie_weight = 0.5;
  double smoothing = 0.5;
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

Json ToJson(const BtOptions& options);

struct BtRating {
  std::map<std::string, double> strengths;  // sums to 1
  std::map<std::string, double> win_rate_pct;
  int iterations = 0;
};

// Minorize-maximize fit of Bradley-Terry strengths. Throws ValidationError
// for fewer than two models and ConvergenceError when the iteration budget
// runs out or a model has no wins at all (no finite maximum).
BtRating FitBradleyTerry(const std::vector<PairwiseComparison>& comparisons,
                         const BtOptions& options = {});

// Percentage of repeated bigrams over lowercase whitespace tokens.
double RepetitionRate(std::string_view text);

// True when any markdown structure pattern matches.
bool MarkdownCheck(std::string_view text);

struct SurfaceSummary {
  int n = 0;
  double mean_words = 0.0;
  double mean_repetition_pct = 0.0;
  double markdown_pct = 0.0;
};

// Per-model surface statistics over (model_id, response) pairs.
std::map<std::string, SurfaceSummary> SummarizeSurface(
    const std::vector<std::pair<std::string, std::string>>& responses);

}  // namespace longform::eval

#endif  // LONGFORM_EVAL_METRICS_H_
