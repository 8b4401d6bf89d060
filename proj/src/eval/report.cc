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

#include "longform/eval/report.h"

#include <cstdio>
#include <map>
#include <set>

#include "longform/common/error.h"

namespace longform::eval {
namespace {

Json Block(const std::vector<JudgeVerdict>& verdicts,
           const ReportOptions& options) {
  const LikertAggregate likert = AggregateLikert(verdicts, options.threshold);
  std::set<std::pair<std::string, std::string>> prompts;
  int unparsed = 0;
  for (const JudgeVerdict& v : verdicts) {
    prompts.emplace(v.dataset, v.prompt_id);
    if (!v.parse_ok) ++unparsed;
  }
  const std::vector<PairwiseComparison> comparisons =
      DerivePairwise(RatingsFromVerdicts(verdicts));
  std::map<std::string, double> win_rates;
  if (likert.models.size() >= 2 && !comparisons.empty()) {
    win_rates = FitBradleyTerry(comparisons, options.bt).win_rate_pct;
  }
  Json models = Json::object();
  for (const auto& [model, s] : likert.models) {
    Json row = {{"n", s.n},
                {"unparsed", s.unparsed},
                {"mean_likert", s.mean_likert},
                {"success_rate_pct", s.success_rate_pct},
                {"bt_win_rate_pct", nullptr}};
    if (auto it = win_rates.find(model); it != win_rates.end()) {
      row["bt_win_rate_pct"] = it->second;
    }
    models[model] = std::move(row);
  }
  return {{"prompts", prompts.size()},
          {"verdicts", verdicts.size()},
          {"unparsed", unparsed},
          {"comparisons", comparisons.size()},
          {"omitted", likert.omitted},
          {"models", std::move(models)}};
}

std::string FormatNumber(const Json& value, const char* format) {
  if (value.is_null()) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), format, value.get<double>());
  return buf;
}

void RenderBlock(const std::string& title, const Json& block,
                 std::string* out) {
  char line[256];
  std::snprintf(line, sizeof(line), "%s (%d prompts, %d unparsed)\n",
                title.c_str(), block["prompts"].get<int>(),
                block["unparsed"].get<int>());
  *out += line;
  std::snprintf(line, sizeof(line), "  %-24s %6s %11s %10s %10s\n", "model",
                "n", "mean_likert", "success_%", "bt_win_%");
  *out += line;
  for (const auto& [model, row] : block["models"].items()) {
    std::snprintf(line, sizeof(line), "  %-24s %6d %11s %10s %10s\n",
                  model.c_str(), row["n"].get<int>(),
                  FormatNumber(row["mean_likert"], "%.2f").c_str(),
                  FormatNumber(row["success_rate_pct"], "%.2f").c_str(),
                  FormatNumber(row["bt_win_rate_pct"], "%.2f").c_str());
    *out += line;
  }
}

}  // namespace

Json BuildReport(const std::vector<JudgeVerdict>& verdicts,
                 const ReportOptions& options) {
  if (verdicts.empty()) throw ValidationError("verdicts", "empty");
  Json report;
  report["config"] = {{"threshold", options.threshold},
                      {"bradley_terry", ToJson(options.bt)},
                      {"win_rate_source", "likert_derived"}};
  report["overall"] = Block(verdicts, options);
  if (options.per_dataset) {
    std::map<std::string, std::vector<JudgeVerdict>> by_dataset;
    for (const JudgeVerdict& v : verdicts) by_dataset[v.dataset].push_back(v);
    Json datasets = Json::object();
    for (const auto& [name, subset] : by_dataset) {
      datasets[name.empty() ? "default" : name] = Block(subset, options);
    }
    report["datasets"] = std::move(datasets);
  }
  return report;
}

std::string RenderReportTable(const Json& report) {
  std::string out;
  RenderBlock("overall", report.at("overall"), &out);
  if (report.contains("datasets")) {
    for (const auto& [name, block] : report["datasets"].items()) {
      out += '\n';
      RenderBlock("dataset " + name, block, &out);
    }
  }
  return out;
}

}  // namespace longform::eval
