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

#include <filesystem>
#include <fstream>
#include <string>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "../e2e_fixture.h"
#include "longform/annotation/store.h"
#include "longform/common/error.h"
#include "longform/common/jsonl.h"
#include "longform/eval/judge.h"
#include "longform/orchestrator/config.h"
#include "longform/orchestrator/pipeline.h"
#include "longform/training/scorer.h"
#include "test_util.h"

namespace longform::orchestrator {
namespace {

namespace fs = std::filesystem;
using ::longform::testing::TempDir;
using ::testing::HasSubstr;

std::string ConfigErrorMessage(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, DefaultsCarryTrainingHyperparameters) {
  const Json c = DefaultConfig();
  EXPECT_EQ(c["grpo"]["group_size"], 4);
  EXPECT_EQ(c["grpo"]["clip_epsilon"], 0.2);
  EXPECT_EQ(c["grpo"]["max_gen_tokens"], 1024);
  EXPECT_EQ(c["grpo"]["batch_size"], 128);
  EXPECT_EQ(c["sft"]["epochs"], 3);
  EXPECT_EQ(c["sft"]["max_tokens"], 4096);
  EXPECT_EQ(c["reward"]["learning_rate"], 2e-5);
  EXPECT_EQ(c["reward"]["batch_size"], 32);
  EXPECT_EQ(c["reward"]["heldout_fraction"], 0.2);
  EXPECT_EQ(c["corpus"]["min_ref_words"], 50);
  EXPECT_EQ(c["eval"]["threshold"], 4);
  EXPECT_EQ(c["eval"]["judge"]["max_retries"], 3);
  for (const char* section : {"corpus", "reward", "grpo", "sft", "eval", "serve"}) {
    EXPECT_TRUE(c[section].is_object()) << section;
  }
}

TEST(ConfigTest, YamlOverlayIsTypedByDefaults) {
  Json c = DefaultConfig();
  MergeYamlText(c, R"(
seed: 17
grpo:
  group_size: 8
  kl_beta: 0.05
  format_gate: false
  signal:
    name: target_length
serve:
  tokens:
    tok-1: alice
)");
  EXPECT_EQ(c["seed"], 17);
  EXPECT_EQ(c["grpo"]["group_size"], 8);
  EXPECT_TRUE(c["grpo"]["group_size"].is_number_integer());
  EXPECT_DOUBLE_EQ(c["grpo"]["kl_beta"].get<double>(), 0.05);
  EXPECT_EQ(c["grpo"]["format_gate"], false);
  EXPECT_EQ(c["grpo"]["signal"]["name"], "target_length");
  EXPECT_EQ(c["grpo"]["clip_epsilon"], 0.2);
  EXPECT_EQ(c["serve"]["tokens"]["tok-1"], "alice");
}

TEST(ConfigTest, UnknownKeysAreRejectedWithTheirPath) {
  Json c = DefaultConfig();
  EXPECT_THAT(ConfigErrorMessage([&] { MergeYamlText(c, "grpo:\n  groupsize: 4\n"); }),
              HasSubstr("grpo.groupsize"));
  EXPECT_THAT(ConfigErrorMessage([&] { MergeYamlText(c, "training: {}\n"); }),
              HasSubstr("training"));
  EXPECT_THAT(ConfigErrorMessage([&] { ApplyOverride(c, "eval.judge.modle=x"); }),
              HasSubstr("eval.judge.modle"));
}

TEST(ConfigTest, MistypedValuesAreRejected) {
  Json c = DefaultConfig();
  EXPECT_THAT(ConfigErrorMessage([&] { ApplyOverride(c, "grpo.group_size=four"); }),
              HasSubstr("grpo.group_size"));
  EXPECT_THAT(ConfigErrorMessage([&] { ApplyOverride(c, "grpo.group_size=4.5"); }),
              HasSubstr("integer"));
  EXPECT_THAT(ConfigErrorMessage([&] { ApplyOverride(c, "grpo.format_gate=maybe"); }),
              HasSubstr("true or false"));
  EXPECT_THAT(ConfigErrorMessage([&] { ApplyOverride(c, "grpo.kl_beta=nan"); }),
              HasSubstr("number"));
  EXPECT_THAT(ConfigErrorMessage([&] { ApplyOverride(c, "grpo=1"); }),
              HasSubstr("section"));
  EXPECT_THAT(ConfigErrorMessage([&] { ApplyOverride(c, "grpo.group_size"); }),
              HasSubstr("key=value"));
  EXPECT_THAT(ConfigErrorMessage([&] { MergeYamlText(c, "grpo: 3\n"); }),
              HasSubstr("mapping"));
  EXPECT_THAT(ConfigErrorMessage([&] { MergeYamlText(c, "grpo: [1\n"); }),
              HasSubstr("cannot parse"));
}

TEST(ConfigTest, OverridesApplyAfterTheFile) {
  TempDir dir;
  const fs::path file = dir.Write("c.yaml", "grpo:\n  group_size: 8\n  steps: 5\n");
  const Json c = LoadConfig(file, {"grpo.group_size=4", "eval.smoothing=0"});
  EXPECT_EQ(c["grpo"]["group_size"], 4);
  EXPECT_EQ(c["grpo"]["steps"], 5);
  EXPECT_EQ(c["eval"]["smoothing"], 0.0);
  EXPECT_TRUE(c["eval"]["smoothing"].is_number_float());
  EXPECT_THROW(LoadConfig(dir.path() / "absent.yaml", {}), ConfigError);
}

TEST(ConfigTest, ResolvedJsonEchoReloadsToTheSameTree) {
  Json c = LoadConfig(std::nullopt, {"seed=9", "eval.tolerance=1e-12",
                                     "serve.tokens.t=bob", "run_dir=a b/c"});
  Json again = DefaultConfig();
  MergeYamlText(again, c.dump(2));
  EXPECT_EQ(again, c);
}

TEST(ConfigTest, AtFindsDottedPaths) {
  const Json c = DefaultConfig();
  EXPECT_EQ(At(c, "grpo.signal.target_words"), 12);
  EXPECT_THROW(At(c, "grpo.signal.missing"), ConfigError);
  EXPECT_THROW(At(c, "grpo..x"), ConfigError);
}

Json RunConfig(const TempDir& dir, std::vector<std::string> overrides = {}) {
  overrides.push_back("run_dir=" + (dir.path() / "run").string());
  return LoadConfig(std::nullopt, overrides);
}

TEST(PipelineTest, PrepareCorpusFiltersAndSplits) {
  TempDir dir;
  std::string eli5, alpaca;
  for (int i = 0; i < 10; ++i) {
    std::string ref;
    for (int w = 0; w < (i < 8 ? 60 : 10); ++w) ref += "word ";
    eli5 += Json{{"question", "q" + std::to_string(i)}, {"answer", ref}}.dump() + "\n";
    alpaca += Json{{"instruction", "i" + std::to_string(i)},
                   {"output", i == 0 ? "```x```\n" + ref : ref}}
                  .dump() +
              "\n";
  }
  const Json c = RunConfig(
      dir, {"corpus.inputs.eli5=" + dir.Write("e.jsonl", eli5).string(),
            "corpus.inputs.alpaca=" + dir.Write("a.jsonl", alpaca).string(),
            "corpus.test_fraction=0.2"});
  const Json summary = PrepareCorpus(c);
  EXPECT_EQ(summary["sources"]["eli5"]["kept"], 8);
  EXPECT_EQ(summary["sources"]["alpaca"]["kept"], 7);
  const auto train = LoadPrompts(dir.path() / "run/corpus/train.jsonl");
  const auto test = LoadPrompts(dir.path() / "run/corpus/test.jsonl");
  EXPECT_EQ(train.size() + test.size(), 15u);
  EXPECT_EQ(test.size(), 3u);
  EXPECT_TRUE(fs::exists(dir.path() / "run/corpus/stats.json"));
}

TEST(PipelineTest, PrepareCorpusNeedsInputs) {
  TempDir dir;
  EXPECT_THROW(PrepareCorpus(RunConfig(dir)), ConfigError);
  EXPECT_THROW(PrepareCorpus(RunConfig(dir, {"corpus.inputs.reddit=x"})),
               ConfigError);
}

TEST(PipelineTest, GrpoRunsWriteCurveCheckpointAndAreDeterministic) {
  auto run = [](const TempDir& dir) {
    const Json c = RunConfig(dir, {"grpo.signal.name=target_length",
                                   "grpo.learning_rate=0.05", "grpo.steps=12",
                                   "grpo.batch_size=2", "seed=3"});
    InitRunDir(c);
    const Json summary = TrainPolicyGrpo(c);
    EXPECT_EQ(summary["steps"], 12);
    return ReadTextFile(dir.path() / "run/curve.jsonl");
  };
  TempDir a, b;
  const std::string curve = run(a);
  EXPECT_EQ(curve, run(b));
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 12);
  EXPECT_TRUE(fs::exists(a.path() / "run/checkpoints/policy.json"));
  EXPECT_EQ(ReadJsonFile(a.path() / "run/config.json")["grpo"]["steps"], 12);
  // A second run in the same directory replaces the curve.
  EXPECT_EQ(curve, run(a));
}

TEST(PipelineTest, GroupSizeOverrideReachesTheTrainer) {
  TempDir dir;
  const Json c = RunConfig(dir, {"grpo.signal.name=length", "grpo.steps=1",
                                 "grpo.batch_size=1", "grpo.group_size=1"});
  EXPECT_THROW(TrainPolicyGrpo(c), ConfigError);
  const Json ok = RunConfig(dir, {"grpo.signal.name=length", "grpo.steps=1",
                                  "grpo.batch_size=1", "grpo.group_size=4"});
  EXPECT_EQ(TrainPolicyGrpo(ok)["steps"], 1);
}

TEST(PipelineTest, SftTrainsFromPromptRecords) {
  TempDir dir;
  std::string data;
  for (int i = 0; i < 4; ++i) {
    data += Json{{"id", "r" + std::to_string(i)}, {"source", "custom"},
                 {"instruction", "say it"}, {"reference", "s1 s2 s3"},
                 {"split", "train"}}
                .dump() +
            "\n";
  }
  const Json c = RunConfig(dir, {"sft.data=" + dir.Write("d.jsonl", data).string(),
                                 "sft.epochs=20", "sft.learning_rate=0.1",
                                 "sft.batch_size=4"});
  const Json summary = TrainPolicySft(c);
  const auto& losses = summary["epoch_train_loss"];
  ASSERT_EQ(losses.size(), 20u);
  EXPECT_LT(losses.back().get<double>(), losses.front().get<double>());
  EXPECT_TRUE(fs::exists(dir.path() / "run/checkpoints/policy.json"));
}

TEST(PipelineTest, TrainRewardOnSyntheticData) {
  TempDir dir;
  const Json c = RunConfig(dir, {"reward.synthetic_examples=60", "reward.epochs=2",
                                 "reward.max_length=40", "reward.learning_rate=1e-3"});
  const Json prefbert = TrainReward(c, training::ScorerKind::kPrefBert);
  EXPECT_EQ(prefbert["train_size"], 48);
  EXPECT_TRUE(fs::exists(dir.path() / "run/checkpoints/prefbert/manifest.json"));
  EXPECT_EQ(ReadJsonl(dir.path() / "run/reward_curve_prefbert.jsonl").size(), 2u);
  const Json grm = TrainReward(c, training::ScorerKind::kGrm);
  EXPECT_TRUE(grm.contains("heldout_pairwise_accuracy"));
  EXPECT_THROW(TrainReward(RunConfig(dir), training::ScorerKind::kPrefBert),
               ConfigError);
}

Json E2eConfig(const TempDir& dir, const testing::E2eFiles& files) {
  return RunConfig(dir, {"eval.prompts=" + files.prompts.string(),
                         "eval.responses=" + files.responses.string(),
                         "eval.judge.recorded_path=" + files.judge.string(),
                         "eval.judge.initial_backoff_ms=0", "eval.smoothing=0",
                         "eval.tolerance=1e-13"});
}

TEST(PipelineTest, EvaluateWritesArtifactsAndReportReproduces) {
  TempDir dir;
  const auto files = testing::WriteE2eFixture(dir.path() / "fixture");
  const Json c = E2eConfig(dir, files);
  InitRunDir(c);
  const Json report = Evaluate(c);
  const fs::path run = dir.path() / "run";
  for (const char* f : {"verdicts.jsonl", "responses.jsonl", "report.json",
                        "report.txt", "surface.json", "config.json"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  EXPECT_EQ(eval::LoadVerdicts(run / "verdicts.jsonl").size(), 90u);
  const Json& overall = report["overall"]["models"];
  EXPECT_DOUBLE_EQ(overall["model-a"]["mean_likert"].get<double>(), 117.0 / 30);
  EXPECT_NEAR(overall["model-a"]["bt_win_rate_pct"].get<double>(), 400.0 / 7, 1e-9);

  const Json stored = ReadJsonFile(run / "config.json");
  EmitReport(stored, run / "verdicts.jsonl", dir.path() / "again.json", std::nullopt);
  EXPECT_EQ(ReadTextFile(dir.path() / "again.json"), ReadTextFile(run / "report.json"));

  const Json surface = ReadJsonFile(run / "surface.json");
  EXPECT_EQ(surface["model-a"]["n"], 30);
  EXPECT_DOUBLE_EQ(surface["model-a"]["mean_words"].get<double>(), 3.0);
}

TEST(PipelineTest, EvaluateRejectsInconsistentInputs) {
  TempDir dir;
  const auto files = testing::WriteE2eFixture(dir.path() / "fixture");
  std::ofstream(files.responses, std::ios::app)
      << R"({"model_id":"model-a","prompt_id":"q0","response":"again"})" << "\n";
  EXPECT_THROW(Evaluate(E2eConfig(dir, files)), ValidationError);
  std::ofstream(files.responses)
      << R"({"model_id":"model-a","prompt_id":"nope","response":"x"})" << "\n";
  EXPECT_THROW(Evaluate(E2eConfig(dir, files)), ValidationError);
  std::ofstream(files.responses) << R"({"model_id":"model-a"})" << "\n";
  EXPECT_THROW(Evaluate(E2eConfig(dir, files)), ValidationError);
}

TEST(PipelineTest, EvaluateGeneratesFromCheckpoints) {
  TempDir dir;
  const Json train = RunConfig(dir, {"grpo.signal.name=length", "grpo.steps=2",
                                     "grpo.batch_size=1"});
  TrainPolicyGrpo(train);
  const auto files = testing::WriteE2eFixture(dir.path() / "fixture");
  const fs::path checkpoint = dir.path() / "run/checkpoints/policy.json";
  eval::RecordedJudgeClient judge(
      [&] {
        std::map<std::pair<std::string, std::string>, std::vector<std::string>> m;
        for (size_t i = 0; i < testing::kE2eRows.size(); ++i) {
          m[{"toy", testing::E2ePromptId(i)}] = {"Final rating: 2"};
        }
        return m;
      }());
  const Json c = RunConfig(dir, {"eval.prompts=" + files.prompts.string(),
                                 "eval.checkpoints.toy=" + checkpoint.string()});
  const Json report = Evaluate(c, &judge);
  EXPECT_EQ(report["overall"]["models"]["toy"]["mean_likert"], 2.0);
  EXPECT_EQ(ReadJsonl(dir.path() / "run/responses.jsonl").size(), 30u);
}

TEST(PipelineTest, JudgeClientSelection) {
  TempDir dir;
  EXPECT_THROW(MakeJudgeClient(RunConfig(dir)), ConfigError);
  EXPECT_THROW(MakeJudgeClient(RunConfig(dir, {"eval.judge.kind=oracle"})),
               ConfigError);
}

TEST(PipelineTest, JudgedTextPrefersTheTaggedAnswer) {
  EXPECT_EQ(JudgedText("<think>x</think><answer>final</answer>"), "final");
  EXPECT_EQ(JudgedText("  plain text  "), "plain text");
}

TEST(PipelineTest, AnnotationStoreSeedingAndExport) {
  TempDir dir;
  const auto files = testing::WriteE2eFixture(dir.path() / "fixture");
  const Json c = RunConfig(dir, {"eval.prompts=" + files.prompts.string(),
                                 "eval.responses=" + files.responses.string(),
                                 "serve.sample_per_dataset=2",
                                 "serve.tokens.tok=ann1"});
  const annotation::ServerConfig sc = ServerConfigFrom(c);
  EXPECT_EQ(sc.tokens.at("tok"), "ann1");
  EXPECT_THROW(ServerConfigFrom(RunConfig(dir)), ConfigError);
  {
    annotation::AnnotationStore store(StoreDir(c));
    EXPECT_EQ(SeedAnnotationStore(c, store), 4u);
    EXPECT_EQ(SeedAnnotationStore(c, store), 0u);
    const auto sessions = store.SessionsFor("ann1");
    ASSERT_EQ(sessions.size(), 4u);
    const auto session = *store.GetSession(sessions[0].session_id);
    annotation::AnnotationRecord record;
    record.session_id = session.session_id;
    record.annotator_id = "ann1";
    int score = 5;
    for (const auto& item : session.items) {
      record.scores[item.slot_label] = score--;
      record.ranking.push_back(item.slot_label);
    }
    record.submitted_at = annotation::UtcNow();
    store.Submit(record);
  }
  const Json summary = ExportAnnotations(c, std::nullopt);
  EXPECT_EQ(summary["rows"], 3);
  EXPECT_EQ(ReadJsonl(dir.path() / "run/annotations_export.jsonl").size(), 3u);
  const auto human = eval::LoadVerdicts(dir.path() / "run/human_verdicts.jsonl");
  ASSERT_EQ(human.size(), 3u);
  EXPECT_EQ(human[0].rater, "ann1");
  EXPECT_TRUE(fs::exists(dir.path() / "run/human_report.json"));
}

TEST(PipelineTest, DiagnosticsRecordTheFailure) {
  TempDir dir;
  const Json c = RunConfig(dir);
  const fs::path path =
      WriteDiagnostics(c, "evaluate", "validation", "bad row", Json::array());
  const Json d = ReadJsonFile(path);
  EXPECT_EQ(d["kind"], "validation");
  EXPECT_EQ(d["command"], "evaluate");
  EXPECT_EQ(d["config"], c);
}

}  // namespace
}  // namespace longform::orchestrator
