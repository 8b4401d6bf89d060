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

#ifndef LONGFORM_EVAL_REPORT_H_
#define LONGFORM_EVAL_REPORT_H_

#include <string>
#include <vector>

#include "longform/common/jsonl.h"
#include "longform/eval/judge.h"
#include "longform/eval/metrics.h"

namespace longform::eval {

struct ReportOptions {
  int threshold = 4;
  BtOptions bt;
  bool per_dataset = true;
};

// Mean Likert, success rate and Likert-derived Bradley-Terry win rate per
// model, overall (all prompts of all datasets) and per dataset. The options
// are echoed under "config". Throws ValidationError on empty input.
Json BuildReport(const std::vector<JudgeVerdict>& verdicts,
                 const ReportOptions& options = {});

// Fixed-width text rendering of BuildReport() output.
std::string RenderReportTable(const Json& report);

}  // namespace longform::eval

#endif  // LONGFORM_EVAL_REPORT_H_
