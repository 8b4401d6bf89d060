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

// LLM-as-judge plumbing: the point-wise and pairwise evaluation templates,
// verdict parsing, judge transports and the batched, retrying dispatcher.

#ifndef LONGFORM_EVAL_JUDGE_H_
#define LONGFORM_EVAL_JUDGE_H_

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "longform/common/jsonl.h"

namespace longform::eval {

// Fills the point-wise template. Throws ValidationError on an empty slot.
std::string RenderPointwisePrompt(std::string_view question,
                                  std::string_view reference,
                                  std::string_view answer);

// Fills the pairwise preference template.
std::string RenderPairwisePrompt(std::string_view question,
                                 std::string_view reference,
                                 std::string_view answer_a,
                                 std::string_view answer_b);

struct ParsedRating {
  std::optional<int> rating;
  bool parse_ok = false;
  bool fallback = false;  // rating came from the bare-integer fallback
  std::string feedback;
};

// Reads the first integer after the last "final rating" marker
// (case-insensitive). An out-of-range integer there fails the parse. Without
// a usable marker, falls back to the last standalone integer in 1..5.
ParsedRating ParseJudgeRating(std::string_view raw);

// 'A' or 'B' from the last "[RESULT]" marker; nullopt otherwise.
std::optional<char> ParsePairwiseResult(std::string_view raw);

struct JudgeVerdict {
  std::string model_id;
  std::string prompt_id;
  std::string dataset;
  std::string rater;  // judge model name or annotator id
  std::string feedback;
  std::optional<int> rating;
  std::string raw;
  bool parse_ok = false;
  bool fallback = false;
  int retries = 0;
  bool reprompted = false;
  std::string error;
};

Json ToJson(const JudgeVerdict& verdict);
JudgeVerdict VerdictFromJson(const Json& json);
void SaveVerdicts(const std::filesystem::path& path,
                  const std::vector<JudgeVerdict>& verdicts);
// Throws ValidationError naming the line for malformed rows.
std::vector<JudgeVerdict> LoadVerdicts(const std::filesystem::path& path);

struct JudgeRequest {
  std::string model_id;
  std::string prompt_id;
  std::string prompt;
};

// A chat-completion style judge. Implementations must be callable from
// several threads and signal transport failures with TransportError.
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual std::string Complete(const JudgeRequest& request) = 0;
};

struct HttpJudgeConfig {
  std::string api_base;  // e.g. https://host/v1
  std::string api_key;
  std::string model = "gpt-4";
  double temperature = 0.0;
  int max_tokens = 512;
  int timeout_seconds = 120;
};

// Reads JUDGE_API_BASE and JUDGE_API_KEY. Throws ConfigError when either is
// unset.
HttpJudgeConfig HttpJudgeConfigFromEnvironment(std::string model);

// POSTs {api_base}/chat/completions with a bearer token and returns
// choices[0].message.content.
class HttpJudgeClient : public JudgeClient {
 public:
  explicit HttpJudgeClient(HttpJudgeConfig config);
  std::string Complete(const JudgeRequest& request) override;

 private:
  HttpJudgeConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

// Replays responses keyed by (model_id, prompt_id). A row is
// {"model_id", "prompt_id", "response"} or {..., "responses": [...]}, the
// latter served one per call with the last repeated. Unknown keys raise
// TransportError.
class RecordedJudgeClient : public JudgeClient {
 public:
  explicit RecordedJudgeClient(const std::filesystem::path& path);
  RecordedJudgeClient(
      std::map<std::pair<std::string, std::string>, std::vector<std::string>>
          responses);

  std::string Complete(const JudgeRequest& request) override;

 private:
  std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::vector<std::string>>
      responses_;
  std::map<std::pair<std::string, std::string>, size_t> served_;
};

struct JudgeItem {
  std::string model_id;
  std::string prompt_id;
  std::string dataset;
  std::string question;
  std::string reference;
  std::string answer;
};

struct JudgeBatchOptions {
  int concurrency = 4;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
  bool reprompt_on_parse_failure = true;
  std::string rater = "judge";
  // Test hook; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Point-wise judging of every item. Verdicts come back in input order; a
// failed item yields parse_ok=false with `error` set, never an exception.
std::vector<JudgeVerdict> JudgeBatch(JudgeClient& client,
                                     const std::vector<JudgeItem>& items,
                                     const JudgeBatchOptions& options = {});

struct PairwiseItem {
  std::string prompt_id;
  std::string model_a;
  std::string model_b;
  std::string question;
  std::string reference;
  std::string answer_a;
  std::string answer_b;
};

struct PairwiseVerdict {
  PairwiseItem item;
  std::optional<char> winner;
  std::string raw;
  int retries = 0;
  std::string error;
};

// Direct pairwise judging with the same retry and re-prompt policy. Requests
// use model_id "<model_a>|<model_b>".
std::vector<PairwiseVerdict> JudgePairwiseBatch(
    JudgeClient& client, const std::vector<PairwiseItem>& items,
    const JudgeBatchOptions& options = {});

}  // namespace longform::eval

#endif  // LONGFORM_EVAL_JUDGE_H_
