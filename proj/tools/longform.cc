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

// Command-line front end for the training and evaluation pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "longform/annotation/server.h"
#include "longform/annotation/store.h"
#include "longform/common/error.h"
#include "longform/eval/report.h"
#include "longform/orchestrator/config.h"
#include "longform/orchestrator/pipeline.h"
#include "longform/training/scorer.h"

namespace {

namespace fs = std::filesystem;
namespace lo = longform::orchestrator;
using longform::Json;

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_path, "YAML or JSON config file");
  cmd->add_option("--set", flags->overrides, "override, e.g. grpo.group_size=4")
      ->take_all();
}

Json Resolve(const CommonFlags& flags, const std::string& fallback_config) {
  std::optional<fs::path> path;
  if (!flags.config_path.empty()) {
    path = flags.config_path;
  } else if (!fallback_config.empty() && fs::exists(fallback_config)) {
    path = fallback_config;
  }
  return lo::LoadConfig(path, flags.overrides);
}

void PrintJson(const Json& json) { std::cout << lo::DumpArtifact(json); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-form reward modeling, GRPO training and evaluation"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* prepare = app.add_subcommand("prepare-corpus",
                                     "load, filter and split prompt corpora");
  AddCommonFlags(prepare, &flags);

  std::string reward_kind;
  auto* train_reward =
      app.add_subcommand("train-reward", "train a learned reward model");
  train_reward->add_option("kind", reward_kind, "prefbert or grm")
      ->required()
      ->check(CLI::IsMember({"prefbert", "grm"}));
  AddCommonFlags(train_reward, &flags);

  std::string policy_method;
  auto* train_policy =
      app.add_subcommand("train-policy", "optimize the policy");
  train_policy->add_option("method", policy_method, "grpo or sft")
      ->required()
      ->check(CLI::IsMember({"grpo", "sft"}));
  AddCommonFlags(train_policy, &flags);

  auto* evaluate =
      app.add_subcommand("evaluate", "judge responses and write the report");
  AddCommonFlags(evaluate, &flags);

  std::string report_in, report_out, report_table;
  auto* report = app.add_subcommand("report", "rebuild a report from verdicts");
  report->add_option("--in", report_in, "verdicts JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "write report JSON here");
  report->add_option("--table", report_table, "write the table here");
  AddCommonFlags(report, &flags);

  auto* serve = app.add_subcommand("serve-annotations",
                                   "serve the human annotation API");
  AddCommonFlags(serve, &flags);

  std::string export_out;
  auto* export_cmd = app.add_subcommand(
      "export-annotations", "export human annotations as verdicts");
  export_cmd->add_option("--out", export_out, "export rows JSONL");
  AddCommonFlags(export_cmd, &flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  const CLI::App* cmd = app.get_subcommands().front();
  const std::string command = cmd->get_name();
  Json config;
  try {
    std::string fallback;
    if (cmd == report) {
      fallback = (fs::path(report_in).parent_path() / "config.json").string();
    }
    config = Resolve(flags, fallback);
    if (cmd == report) {
      // Diagnostics land next to the verdicts; nothing else is written there.
      config["run_dir"] = fs::path(report_in).parent_path().string();
    } else {
      lo::InitRunDir(config);
      lo::InitLogging(config, command);
    }
  } catch (const longform::Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", std::string(e.kind()).c_str(),
                 e.what());
    return kUsageError;
  }

  try {
    if (cmd == prepare) {
      PrintJson(lo::PrepareCorpus(config));
    } else if (cmd == train_reward) {
      PrintJson(lo::TrainReward(config,
                                longform::training::ParseScorerKind(reward_kind)));
    } else if (cmd == train_policy) {
      PrintJson(policy_method == "grpo" ? lo::TrainPolicyGrpo(config)
                                        : lo::TrainPolicySft(config));
    } else if (cmd == evaluate) {
      std::cout << longform::eval::RenderReportTable(lo::Evaluate(config));
    } else if (cmd == report) {
      std::optional<fs::path> out, table;
      if (!report_out.empty()) out = report_out;
      if (!report_table.empty()) table = report_table;
      std::cout << longform::eval::RenderReportTable(
          lo::EmitReport(config, report_in, out, table));
    } else if (cmd == serve) {
      longform::annotation::AnnotationStore store(lo::StoreDir(config));
      const size_t added = lo::SeedAnnotationStore(config, store);
      longform::annotation::AnnotationServer server(store,
                                                    lo::ServerConfigFrom(config));
      std::fprintf(stderr, "serving %zu sessions (%zu new) on %s:%d\n",
                   store.session_count(), added,
                   config["serve"]["host"].get<std::string>().c_str(),
                   config["serve"]["port"].get<int>());
      server.Run();
    } else if (cmd == export_cmd) {
      std::optional<fs::path> out;
      if (!export_out.empty()) out = export_out;
      PrintJson(lo::ExportAnnotations(config, out));
    }
  } catch (const longform::ConfigError& e) {
    std::fprintf(stderr, "error[config]: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::string kind = "internal";
    Json fields = Json::array();
    if (const auto* le = dynamic_cast<const longform::Error*>(&e)) {
      kind = std::string(le->kind());
    }
    if (const auto* ve = dynamic_cast<const longform::ValidationError*>(&e)) {
      for (const auto& f : ve->fields()) {
        fields.push_back({{"path", f.path}, {"message", f.message}});
      }
    }
    std::string diagnostics = "(unavailable)";
    try {
      diagnostics =
          lo::WriteDiagnostics(config, command, kind, e.what(), fields).string();
    } catch (const std::exception&) {
    }
    std::fprintf(stderr, "error[%s]: %s (diagnostics: %s)\n", kind.c_str(),
                 e.what(), diagnostics.c_str());
    return kRuntimeError;
  }
  return 0;
}
