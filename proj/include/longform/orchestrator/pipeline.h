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

// One function per pipeline stage. Each reads its section of a resolved run
// config, writes artifacts under `run_dir` and returns a JSON summary.
//
// Run directory layout:
//   config.json        resolved config of the last command
//   logs/              <command>.log, stage summaries, error.json
//   checkpoints/       policy.json, prefbert/, grm/
//   corpus/            train.jsonl, test.jsonl, stats.json
//   curve.jsonl        GRPO reward curve
//   responses.jsonl    responses judged by `evaluate`
//   verdicts.jsonl     judge verdicts
//   report.json        aggregate report (report.txt renders it)

#ifndef LONGFORM_ORCHESTRATOR_PIPELINE_H_
#define LONGFORM_ORCHESTRATOR_PIPELINE_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "longform/annotation/server.h"
#include "longform/annotation/store.h"
#include "longform/common/jsonl.h"
#include "longform/corpus/corpus.h"
#include "longform/eval/judge.h"
#include "longform/eval/report.h"
#include "longform/training/scorer.h"

namespace longform::orchestrator {

std::filesystem::path RunDir(const Json& config);

// Creates the run directory tree and writes config.json.
void InitRunDir(const Json& config);

// Routes spdlog to stderr and logs/<command>.log.
void InitLogging(const Json& config, std::string_view command);

// Writes logs/error.json and returns its path.
std::filesystem::path WriteDiagnostics(const Json& config,
                                       std::string_view command,
                                       std::string_view kind,
                                       std::string_view message,
                                       const Json& fields);

Json PrepareCorpus(const Json& config);

Json TrainReward(const Json& config, training::ScorerKind kind);

Json TrainPolicyGrpo(const Json& config);
Json TrainPolicySft(const Json& config);

// Row of a responses file: {"model_id", "prompt_id", "response"}.
struct ResponseRow {
  std::string model_id;
  std::string prompt_id;
  std::string response;
};
std::vector<ResponseRow> LoadResponses(const std::filesystem::path& path);
std::vector<corpus::PromptRecord> LoadPrompts(const std::filesystem::path& path);

// Text shown to the judge: the tagged answer when present, else the trimmed
// response.
std::string JudgedText(std::string_view response);

std::unique_ptr<eval::JudgeClient> MakeJudgeClient(const Json& config);
eval::ReportOptions ReportOptionsFrom(const Json& config);

// Judges every (model, prompt) response and writes verdicts, report and
// surface metrics. `client` overrides the configured judge when non-null.
Json Evaluate(const Json& config, eval::JudgeClient* client = nullptr);

// Rebuilds the report from stored verdicts. Writes JSON to `json_out` and the
// table to `table_out` when given.
Json EmitReport(const Json& config, const std::filesystem::path& verdicts,
                const std::optional<std::filesystem::path>& json_out,
                const std::optional<std::filesystem::path>& table_out);

std::filesystem::path StoreDir(const Json& config);
annotation::ServerConfig ServerConfigFrom(const Json& config);

// Seeds an empty store with sessions built from eval.prompts and
// eval.responses. Returns the number of sessions added.
size_t SeedAnnotationStore(const Json& config, annotation::AnnotationStore& store);

// Writes the export rows, the derived human verdicts and their report.
Json ExportAnnotations(const Json& config,
                       const std::optional<std::filesystem::path>& out);

// Canonical serialization used for every JSON artifact.
std::string DumpArtifact(const Json& json);

}  // namespace longform::orchestrator

#endif  // LONGFORM_ORCHESTRATOR_PIPELINE_H_
