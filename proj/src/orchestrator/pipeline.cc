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

#include "longform/orchestrator/pipeline.h"

#include <chrono>
#include <map>
#include <set>

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "longform/common/error.h"
#include "longform/common/rng.h"
#include "longform/common/text.h"
#include "longform/eval/metrics.h"
#include "longform/grpo/policy.h"
#include "longform/grpo/trainer.h"
#include "longform/nn/encoder.h"
#include "longform/orchestrator/config.h"
#include "longform/reward/signals.h"
#include "longform/training/datasets.h"
#include "longform/training/trainer.h"

namespace longform::orchestrator {
namespace fs = std::filesystem;
namespace {

std::string Str(const Json& config, std::string_view path) {
  return At(config, path).get<std::string>();
}
int Int(const Json& config, std::string_view path) {
  return At(config, path).get<int>();
}
double Real(const Json& config, std::string_view path) {
  return At(config, path).get<double>();
}
bool Bool(const Json& config, std::string_view path) {
  return At(config, path).get<bool>();
}
uint64_t Seed(const Json& config) { return At(config, "seed").get<uint64_t>(); }

fs::path Required(const Json& config, std::string_view path) {
  const std::string value = Str(config, path);
  if (value.empty()) throw ConfigError(std::string(path) + " is required");
  return value;
}

void MakeParent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void WriteArtifact(const fs::path& path, const Json& json) {
  MakeParent(path);
  WriteTextFile(path, DumpArtifact(json));
}

void ResetFile(const fs::path& path) {
  MakeParent(path);
  fs::remove(path);
}

std::unique_ptr<grpo::ToyPolicy> MakePolicy(const Json& config) {
  const std::string init = Str(config, "policy.init_path");
  if (!init.empty()) return grpo::ToyPolicy::Load(init);
  grpo::ToyPolicyConfig pc;
  pc.vocabulary = Int(config, "policy.vocabulary");
  pc.max_tokens = Int(config, "policy.max_tokens");
  pc.prompt_slots = Int(config, "policy.prompt_slots");
  pc.init_scale = Real(config, "policy.init_scale");
  pc.seed = Seed(config);
  return std::make_unique<grpo::ToyPolicy>(pc);
}

std::vector<corpus::PromptRecord> SyntheticPrompts(int n) {
  std::vector<corpus::PromptRecord> prompts;
  for (int i = 0; i < n; ++i) {
    corpus::PromptRecord r;
    r.id = "p" + std::to_string(i);
    r.instruction = "Write answer number " + std::to_string(i) + ".";
    prompts.push_back(std::move(r));
  }
  return prompts;
}

std::vector<ResponseRow> GenerateFromCheckpoints(
    const Json& config, const std::vector<corpus::PromptRecord>& prompts) {
  std::vector<ResponseRow> rows;
  const double temperature = Real(config, "eval.temperature");
  for (const auto& [model_id, path] : At(config, "eval.checkpoints").items()) {
    const auto policy = grpo::ToyPolicy::Load(path.get<std::string>());
    Rng rng(Fnv1a64(model_id, Seed(config)));
    for (const corpus::PromptRecord& p : prompts) {
      auto samples =
          policy->Sample(corpus::RenderTrainingPrompt(p.instruction), 1,
                         policy->config().max_tokens, temperature, rng);
      rows.push_back({model_id, p.id, std::move(samples.front().text)});
    }
  }
  return rows;
}

Json SurfaceJson(const std::vector<ResponseRow>& rows) {
  std::vector<std::pair<std::string, std::string>> texts;
  for (const ResponseRow& r : rows) {
    texts.emplace_back(r.model_id, JudgedText(r.response));
  }
  Json out = Json::object();
  for (const auto& [model, s] : eval::SummarizeSurface(texts)) {
    out[model] = {{"n", s.n},
                  {"mean_words", s.mean_words},
                  {"repetition_pct", s.mean_repetition_pct},
                  {"markdown_pct", s.markdown_pct}};
  }
  return out;
}

}  // namespace

std::string DumpArtifact(const Json& json) { return json.dump(2) + "\n"; }

fs::path RunDir(const Json& config) { return Str(config, "run_dir"); }

void InitRunDir(const Json& config) {
  const fs::path dir = RunDir(config);
  fs::create_directories(dir / "logs");
  fs::create_directories(dir / "checkpoints");
  WriteArtifact(dir / "config.json", config);
}

void InitLogging(const Json& config, std::string_view command) {
  const fs::path log = RunDir(config) / "logs" / (std::string(command) + ".log");
  fs::create_directories(log.parent_path());
  std::vector<spdlog::sink_ptr> sinks = {
      std::make_shared<spdlog::sinks::stderr_color_sink_mt>(),
      std::make_shared<spdlog::sinks::basic_file_sink_mt>(log.string())};
  auto logger = std::make_shared<spdlog::logger>(std::string(command),
                                                 sinks.begin(), sinks.end());
  logger->flush_on(spdlog::level::info);
  spdlog::set_default_logger(logger);
}

fs::path WriteDiagnostics(const Json& config, std::string_view command,
                          std::string_view kind, std::string_view message,
                          const Json& fields) {
  const fs::path path = RunDir(config) / "logs" / "error.json";
  WriteArtifact(path, Json{{"command", command},
                           {"kind", kind},
                           {"message", message},
                           {"fields", fields},
                           {"config", config}});
  return path;
}

Json PrepareCorpus(const Json& config) {
  const Json& inputs = At(config, "corpus.inputs");
  if (inputs.empty()) throw ConfigError("corpus.inputs is empty");
  const fs::path dir = RunDir(config) / "corpus";
  fs::create_directories(dir);
  std::vector<corpus::PromptRecord> all;
  Json loaded = Json::object();
  std::vector<Json> errors;
  for (const auto& [name, path] : inputs.items()) {
    const auto source = corpus::ParseSource(name);
    if (!source) throw ConfigError("corpus.inputs." + name + ": unknown source");
    corpus::LoadResult r = corpus::LoadCorpus(path.get<std::string>(), *source);
    for (const corpus::RecordError& e : r.errors) {
      errors.push_back({{"source", name},
                        {"line", e.line_number},
                        {"message", e.message}});
    }
    const auto kept = corpus::FilterCorpus(r.records,
                                           Int(config, "corpus.min_ref_words"),
                                           Bool(config, "corpus.exclude_code"));
    loaded[name] = {{"loaded", r.records.size()},
                    {"malformed", r.errors.size()},
                    {"kept", kept.size()}};
    spdlog::info("{}: {} loaded, {} malformed, {} kept", name, r.records.size(),
                 r.errors.size(), kept.size());
    all.insert(all.end(), kept.begin(), kept.end());
  }
  const corpus::CorpusSplit split = corpus::SplitCorpus(
      all, Real(config, "corpus.test_fraction"), Seed(config));
  auto write = [](const fs::path& path,
                  const std::vector<corpus::PromptRecord>& records) {
    std::vector<Json> rows;
    for (const auto& r : records) rows.push_back(corpus::ToJson(r));
    WriteJsonl(path, rows);
  };
  write(dir / "train.jsonl", split.train);
  write(dir / "test.jsonl", split.test);
  WriteJsonl(dir / "errors.jsonl", errors);
  Json summary = {{"sources", loaded},
                  {"train", corpus::ToJson(corpus::ComputeStats(split.train))},
                  {"test", corpus::ToJson(corpus::ComputeStats(split.test))}};
  WriteArtifact(dir / "stats.json", summary);
  return summary;
}

Json TrainReward(const Json& config, training::ScorerKind kind) {
  training::TrainConfig tc;
  tc.learning_rate = Real(config, "reward.learning_rate");
  tc.batch_size = Int(config, "reward.batch_size");
  tc.epochs = Int(config, "reward.epochs");
  tc.heldout_fraction = Real(config, "reward.heldout_fraction");
  tc.seed = Seed(config);
  tc.freeze_encoder = Bool(config, "reward.freeze_encoder");
  tc.weight_decay = Real(config, "reward.weight_decay");
  tc.vocab_max_words = Int(config, "reward.vocab_max_words");
  tc.vocab_min_count = Int(config, "reward.vocab_min_count");
  tc.hash_buckets = Int(config, "reward.hash_buckets");
  tc.Validate();

  nn::EncoderConfig ec;
  ec.max_length = Int(config, "reward.max_length");
  ec.pooling = nn::ParsePooling(Str(config, "reward.pooling"));
  ec = nn::ApplyEncoderPreset(Str(config, "reward.preset"), ec);

  const std::string name(training::ScorerKindName(kind));
  const fs::path curve = RunDir(config) / ("reward_curve_" + name + ".jsonl");
  ResetFile(curve);
  auto on_epoch = [&](int epoch, double loss) {
    spdlog::info("{} epoch {} train loss {:.6f}", name, epoch, loss);
    AppendJsonl(curve, {{"epoch", epoch}, {"train_loss", loss}});
  };
  const int synthetic = Int(config, "reward.synthetic_examples");
  const int vocabulary = Int(config, "reward.synthetic_vocabulary");
  training::TrainResult result;
  if (kind == training::ScorerKind::kPrefBert) {
    std::vector<training::LikertExample> data;
    const std::string path = Str(config, "reward.likert_data");
    if (!path.empty()) {
      data = training::LoadLikertExamples(path);
    } else if (synthetic > 0) {
      training::OverlapCorpusOptions options;
      options.vocabulary = vocabulary;
      data = training::MakeOverlapLikertCorpus(synthetic, Seed(config), options);
    } else {
      throw ConfigError(
          "reward.likert_data or reward.synthetic_examples is required");
    }
    result = training::TrainPrefBert(data, ec, tc, on_epoch);
  } else {
    std::vector<training::PreferencePair> data;
    const std::string path = Str(config, "reward.pairs_data");
    if (!path.empty()) {
      data = training::LoadPreferencePairs(path);
    } else if (synthetic > 0) {
      data = training::MakeTopicPreferencePairs(synthetic, Seed(config),
                                                vocabulary);
    } else {
      throw ConfigError(
          "reward.pairs_data or reward.synthetic_examples is required");
    }
    result = training::TrainGrm(data, ec, tc, on_epoch);
  }
  const fs::path out = RunDir(config) / "checkpoints" / name;
  fs::create_directories(out);
  result.model.Save(out);
  Json summary = training::ToJson(result.report);
  summary["checkpoint"] = out.string();
  WriteArtifact(RunDir(config) / "logs" / ("train_reward_" + name + ".json"),
                summary);
  return summary;
}

Json TrainPolicyGrpo(const Json& config) {
  grpo::GrpoRunConfig rc;
  grpo::GrpoConfig& g = rc.grpo;
  g.group_size = Int(config, "grpo.group_size");
  g.clip_epsilon = Real(config, "grpo.clip_epsilon");
  g.kl_beta = Real(config, "grpo.kl_beta");
  g.learning_rate = Real(config, "grpo.learning_rate");
  g.max_prompt_tokens = Int(config, "grpo.max_prompt_tokens");
  g.max_gen_tokens = Int(config, "grpo.max_gen_tokens");
  g.batch_size = Int(config, "grpo.batch_size");
  g.advantage_std_floor = Real(config, "grpo.advantage_std_floor");
  g.token_level_ratio = Bool(config, "grpo.token_level_ratio");
  g.log_ratio_clamp = Real(config, "grpo.log_ratio_clamp");
  g.Validate();
  rc.steps = Int(config, "grpo.steps");
  rc.temperature = Real(config, "grpo.temperature");
  rc.format_gate = Bool(config, "grpo.format_gate");
  rc.seed = Seed(config);
  rc.curve_path = RunDir(config) / "curve.jsonl";
  ResetFile(*rc.curve_path);

  reward::SignalConfig sc;
  sc.name = Str(config, "grpo.signal.name");
  sc.model_path = Str(config, "grpo.signal.model_path");
  sc.embedding_dim = Int(config, "grpo.signal.embedding_dim");
  sc.target_words = Int(config, "grpo.signal.target_words");
  sc.length_cap_words = Int(config, "grpo.signal.length_cap_words");
  const auto signal = reward::MakeSignal(sc);

  const std::string prompt_path = Str(config, "grpo.prompts");
  const std::vector<corpus::PromptRecord> prompts =
      prompt_path.empty() ? SyntheticPrompts(Int(config, "grpo.synthetic_prompts"))
                          : LoadPrompts(prompt_path);
  auto policy = MakePolicy(config);
  spdlog::info("grpo: {} prompts, G={}, {} steps, signal {}", prompts.size(),
               g.group_size, rc.steps, signal->name());
  const grpo::GrpoRunResult result =
      grpo::GrpoTrain(*policy, prompts, *signal, rc);
  const fs::path checkpoint = RunDir(config) / "checkpoints" / "policy.json";
  fs::create_directories(checkpoint.parent_path());
  policy->Save(checkpoint);
  Json summary = {{"steps", result.curve.size()},
                  {"skipped_updates", result.skipped_updates},
                  {"checkpoint", checkpoint.string()},
                  {"curve", rc.curve_path->string()}};
  if (!result.curve.empty()) {
    summary["final"] = grpo::ToJson(result.curve.back());
  }
  WriteArtifact(RunDir(config) / "logs" / "train_policy_grpo.json", summary);
  return summary;
}

Json TrainPolicySft(const Json& config) {
  grpo::SftConfig sc;
  sc.epochs = Int(config, "sft.epochs");
  sc.learning_rate = Real(config, "sft.learning_rate");
  sc.batch_size = Int(config, "sft.batch_size");
  sc.max_tokens = Int(config, "sft.max_tokens");
  sc.heldout_fraction = Real(config, "sft.heldout_fraction");
  sc.seed = Seed(config);
  sc.Validate();
  const auto records = LoadPrompts(Required(config, "sft.data"));
  auto policy = MakePolicy(config);
  const grpo::SftReport report = grpo::SftTrain(*policy, records, sc);
  const fs::path checkpoint = RunDir(config) / "checkpoints" / "policy.json";
  fs::create_directories(checkpoint.parent_path());
  policy->Save(checkpoint);
  Json summary = grpo::ToJson(report);
  summary["checkpoint"] = checkpoint.string();
  WriteArtifact(RunDir(config) / "logs" / "train_policy_sft.json", summary);
  return summary;
}

std::vector<ResponseRow> LoadResponses(const fs::path& path) {
  std::vector<ResponseRow> rows;
  std::vector<FieldError> errors;
  ForEachJsonLine(path, [&](const JsonLine& line) {
    const std::string where = path.string() + ":" + std::to_string(line.line_number);
    if (!line.value) {
      errors.push_back({where, line.parse_error});
      return;
    }
    const Json& v = *line.value;
    for (const char* key : {"model_id", "prompt_id", "response"}) {
      if (!v.contains(key) || !v[key].is_string()) {
        errors.push_back({where, std::string("missing string field ") + key});
        return;
      }
    }
    rows.push_back({v["model_id"], v["prompt_id"], v["response"]});
  });
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return rows;
}

std::vector<corpus::PromptRecord> LoadPrompts(const fs::path& path) {
  std::vector<corpus::PromptRecord> records;
  std::vector<FieldError> errors;
  ForEachJsonLine(path, [&](const JsonLine& line) {
    const std::string where = path.string() + ":" + std::to_string(line.line_number);
    if (!line.value) {
      errors.push_back({where, line.parse_error});
      return;
    }
    try {
      records.push_back(corpus::PromptRecordFromJson(*line.value));
    } catch (const std::exception& e) {
      errors.push_back({where, e.what()});
    }
  });
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return records;
}

std::string JudgedText(std::string_view response) {
  return corpus::ExtractAnswer(response).answer;
}

std::unique_ptr<eval::JudgeClient> MakeJudgeClient(const Json& config) {
  const std::string kind = Str(config, "eval.judge.kind");
  if (kind == "recorded") {
    return std::make_unique<eval::RecordedJudgeClient>(
        Required(config, "eval.judge.recorded_path"));
  }
  if (kind == "http") {
    eval::HttpJudgeConfig hc =
        eval::HttpJudgeConfigFromEnvironment(Str(config, "eval.judge.model"));
    hc.temperature = Real(config, "eval.judge.temperature");
    hc.max_tokens = Int(config, "eval.judge.max_tokens");
    hc.timeout_seconds = Int(config, "eval.judge.timeout_seconds");
    return std::make_unique<eval::HttpJudgeClient>(hc);
  }
  throw ConfigError("eval.judge.kind: expected recorded or http, got '" + kind +
                    "'");
}

eval::ReportOptions ReportOptionsFrom(const Json& config) {
  eval::ReportOptions options;
  options.threshold = Int(config, "eval.threshold");
  options.per_dataset = Bool(config, "eval.per_dataset");
  options.bt.tie_weight = Real(config, "eval.tie_weight");
  options.bt.smoothing = Real(config, "eval.smoothing");
  options.bt.tolerance = Real(config, "eval.tolerance");
  options.bt.max_iterations = Int(config, "eval.max_iterations");
  return options;
}

Json Evaluate(const Json& config, eval::JudgeClient* client) {
  const auto prompts = LoadPrompts(Required(config, "eval.prompts"));
  std::map<std::string, const corpus::PromptRecord*> by_id;
  for (const auto& p : prompts) {
    if (!by_id.emplace(p.id, &p).second) {
      throw ValidationError("eval.prompts", "duplicate prompt id " + p.id);
    }
  }
  std::vector<ResponseRow> rows;
  if (const std::string path = Str(config, "eval.responses"); !path.empty()) {
    rows = LoadResponses(path);
  }
  for (ResponseRow& r : GenerateFromCheckpoints(config, prompts)) {
    rows.push_back(std::move(r));
  }
  if (rows.empty()) {
    throw ConfigError("eval.responses or eval.checkpoints is required");
  }

  std::vector<eval::JudgeItem> items;
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<Json> response_rows;
  for (const ResponseRow& r : rows) {
    const auto it = by_id.find(r.prompt_id);
    if (it == by_id.end()) {
      throw ValidationError("responses", "unknown prompt id " + r.prompt_id);
    }
    if (!seen.emplace(r.model_id, r.prompt_id).second) {
      throw ValidationError("responses", "duplicate response for " +
                                             r.model_id + "/" + r.prompt_id);
    }
    const corpus::PromptRecord& p = *it->second;
    items.push_back({r.model_id, r.prompt_id,
                     std::string(corpus::SourceName(p.source)), p.instruction,
                     p.reference, JudgedText(r.response)});
    response_rows.push_back(
        {{"model_id", r.model_id}, {"prompt_id", r.prompt_id},
         {"response", r.response}});
  }

  eval::JudgeBatchOptions options;
  options.concurrency = Int(config, "eval.judge.concurrency");
  options.max_retries = Int(config, "eval.judge.max_retries");
  options.initial_backoff =
      std::chrono::milliseconds(Int(config, "eval.judge.initial_backoff_ms"));
  options.backoff_factor = Real(config, "eval.judge.backoff_factor");
  options.reprompt_on_parse_failure = Bool(config, "eval.judge.reprompt");
  options.rater = Str(config, "eval.judge.model");
  std::unique_ptr<eval::JudgeClient> owned;
  if (client == nullptr) {
    owned = MakeJudgeClient(config);
    client = owned.get();
  }
  spdlog::info("judging {} responses", items.size());
  const std::vector<eval::JudgeVerdict> verdicts =
      eval::JudgeBatch(*client, items, options);
  int failed = 0;
  for (const auto& v : verdicts) {
    if (!v.error.empty()) {
      ++failed;
      spdlog::warn("{}/{}: {}", v.model_id, v.prompt_id, v.error);
    }
  }

  const fs::path dir = RunDir(config);
  fs::create_directories(dir);
  WriteJsonl(dir / "responses.jsonl", response_rows);
  eval::SaveVerdicts(dir / "verdicts.jsonl", verdicts);
  WriteArtifact(dir / "surface.json", SurfaceJson(rows));
  Json report = EmitReport(config, dir / "verdicts.jsonl", dir / "report.json",
                           dir / "report.txt");
  spdlog::info("{} verdicts, {} transport failures", verdicts.size(), failed);
  return report;
}

Json EmitReport(const Json& config, const fs::path& verdicts,
                const std::optional<fs::path>& json_out,
                const std::optional<fs::path>& table_out) {
  Json report = eval::BuildReport(eval::LoadVerdicts(verdicts),
                                  ReportOptionsFrom(config));
  if (json_out) WriteArtifact(*json_out, report);
  if (table_out) {
    MakeParent(*table_out);
    WriteTextFile(*table_out, eval::RenderReportTable(report));
  }
  return report;
}

fs::path StoreDir(const Json& config) {
  const std::string dir = Str(config, "serve.store_dir");
  return dir.empty() ? RunDir(config) / "annotations" : fs::path(dir);
}

annotation::ServerConfig ServerConfigFrom(const Json& config) {
  annotation::ServerConfig sc;
  sc.host = Str(config, "serve.host");
  sc.port = Int(config, "serve.port");
  for (const auto& [token, annotator] : At(config, "serve.tokens").items()) {
    sc.tokens[token] = annotator.get<std::string>();
  }
  sc.admin_token = Str(config, "serve.admin_token");
  sc.cors_origin = Str(config, "serve.cors_origin");
  if (sc.tokens.empty()) throw ConfigError("serve.tokens is empty");
  return sc;
}

size_t SeedAnnotationStore(const Json& config,
                           annotation::AnnotationStore& store) {
  if (store.session_count() > 0) return 0;
  const auto prompts = LoadPrompts(Required(config, "eval.prompts"));
  annotation::ResponseTable table;
  for (const ResponseRow& r : LoadResponses(Required(config, "eval.responses"))) {
    table[r.model_id][r.prompt_id] = JudgedText(r.response);
  }
  std::vector<corpus::PromptRecord> chosen;
  const int per_dataset = Int(config, "serve.sample_per_dataset");
  if (per_dataset <= 0) {
    chosen = prompts;
  } else {
    std::map<corpus::Source, std::vector<corpus::PromptRecord>> groups;
    for (const auto& p : prompts) groups[p.source].push_back(p);
    for (const auto& [source, group] : groups) {
      const auto picked = corpus::SampleRecords(
          group, static_cast<size_t>(per_dataset),
          Fnv1a64(corpus::SourceName(source), Seed(config)));
      chosen.insert(chosen.end(), picked.begin(), picked.end());
    }
  }
  const auto sessions = annotation::CreateSessions(chosen, table, Seed(config));
  store.AddSessions(sessions);
  return sessions.size();
}

Json ExportAnnotations(const Json& config, const std::optional<fs::path>& out) {
  annotation::AnnotationStore store(StoreDir(config));
  const annotation::ExportResult result = store.Export();
  const fs::path dir = RunDir(config);
  const fs::path rows_path = out ? *out : dir / "annotations_export.jsonl";
  MakeParent(rows_path);
  std::vector<Json> rows;
  for (const auto& r : result.rows) rows.push_back(annotation::ToJson(r));
  WriteJsonl(rows_path, rows);
  const auto verdicts = annotation::ExportToVerdicts(result.rows);
  eval::SaveVerdicts(dir / "human_verdicts.jsonl", verdicts);
  Json summary = {{"rows", result.rows.size()},
                  {"orphans_skipped", result.orphans_skipped},
                  {"export", rows_path.string()}};
  if (!verdicts.empty()) {
    EmitReport(config, dir / "human_verdicts.jsonl", dir / "human_report.json",
               dir / "human_report.txt");
    summary["report"] = (dir / "human_report.json").string();
  }
  return summary;
}

}  // namespace longform::orchestrator
