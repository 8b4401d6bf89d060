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

#include "longform/eval/judge.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "longform/common/error.h"
#include "longform/common/text.h"

namespace longform::eval {
namespace {

constexpr std::string_view kPointwiseTemplate =
    "You will be given a user question, a reference answer, and a system "
    "answer. Your task is to provide an overall rating scoring how well the "
    "system answer addresses the user question against the reference answer. "
    "Give your answer as an integer on a scale of 1 to 5, where 1 means that "
    "the system answer is not informative, and 5 means that the answer "
    "addresses the question according to the criteria below.\n"
    "Rubric:\n"
    "Factual Accuracy: The answer must be factually correct and does not "
    "contradict the reference answer.\n"
    "Relevance and Completeness: The answer should directly address the "
    "specific question, covering all essential aspects.\n"
    "Clarity and Organization: The answer should be well-structured, "
    "coherent, and easy to follow.\n"
    "Conciseness: The answer should avoid unnecessary repetition and be as "
    "clear and succinct as possible.\n"
    "Completeness: The answer is complete and not repetitive.\n"
    "Please base your overall rating on how well the system answer performs "
    "in these areas.\n"
    "Question: {question}\n"
    "Reference Answer: {reference_answer}\n"
    "System Answer: {answer}\n"
    "Please be as strict and as critical and harsh as possible. \n"
    "Provide your feedback as follows:\n"
    "Feedback:::\n"
    "Final rating: (your rating, as an integer between 1 and 5)";

constexpr std::string_view kPairwiseTemplate =
    "You are a fair judge assistant tasked with providing clear, objective "
    "feedback based on specific criteria, ensuring each assessment reflects "
    "the absolute standards set for performance.\n"
    "Your task is to provide your preferred response as either A or B. Please "
    "strictly follow the output format as:\n"
    "Feedback: Reason why you choose this answer\n"
    "[RESULT] A or B</s>\n"
    "Rubric:\n"
    "Factual Accuracy: The answer must be factually correct and does not "
    "contradict the reference answer.\n"
    "Relevance and Completeness: The answer should directly address the "
    "specific question, covering all essential aspects.\n"
    "Clarity and Organization: The answer should be well-structured, "
    "coherent, and easy to follow.\n"
    "Conciseness: The answer should avoid unnecessary repetition and be as "
    "clear and succinct as possible.\n"
    "Completeness: The answer is complete and not repetitive.\n"
    "Write a detailed feedback that assesses the quality of two responses "
    "strictly based on the given score rubric, not evaluating in general.\n"
    "After writing a feedback, choose a better response between Response A "
    "and Response B. You should refer to the score rubric.\n"
    "Question: {question}\n"
    "Reference Answer: {reference_answer}\n"
    "Answer A: {answer_A}\n"
    "Answer B: {answer_B}\n"
    "Please be as strict and as critical and harsh as possible.\n"
    "Provide your feedback as follows:\n"
    "Feedback:::\n"
    "Final rating: (your rating, as an integer between 1 and 5)";

// Single left-to-right pass over the template; substituted text is never
// rescanned.
std::string FillTemplate(
    std::string_view tmpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& slots) {
  std::string out;
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(i + 1, close - i - 1);
        auto it = std::find_if(slots.begin(), slots.end(),
                               [&](const auto& s) { return s.first == name; });
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

void RequireNonEmpty(std::string_view field, std::string_view value) {
  if (Trim(value).empty()) {
    throw ValidationError(std::string(field), "must be non-empty");
  }
}

bool IsDigit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }
bool IsAlnum(char c) { return std::isalnum(static_cast<unsigned char>(c)); }

struct IntegerToken {
  size_t end = 0;
  bool decimal = false;  // followed by ".<digit>"
  long value = 0;
};

IntegerToken ReadInteger(std::string_view text, size_t begin) {
  IntegerToken token{begin};
  while (token.end < text.size() && IsDigit(text[token.end])) ++token.end;
  const std::string_view digits = text.substr(begin, token.end - begin);
  token.value = digits.size() > 6 ? 1000000 : std::stol(std::string(digits));
  token.decimal = token.end + 1 < text.size() && text[token.end] == '.' &&
                  IsDigit(text[token.end + 1]);
  return token;
}

std::optional<int> LastStandaloneRating(std::string_view text) {
  std::optional<int> found;
  size_t i = 0;
  while (i < text.size()) {
    if (!IsDigit(text[i])) {
      ++i;
      continue;
    }
    const IntegerToken token = ReadInteger(text, i);
    const bool left_ok =
        i == 0 || (!IsAlnum(text[i - 1]) && text[i - 1] != '.');
    const bool right_ok = token.end == text.size() || !IsAlnum(text[token.end]);
    if (left_ok && right_ok && !token.decimal && token.value >= 1 &&
        token.value <= 5) {
      found = static_cast<int>(token.value);
    }
    i = token.end;
  }
  return found;
}

std::string ExtractFeedback(std::string_view raw, std::string_view lower,
                            size_t marker) {
  std::string_view head = raw.substr(0, marker);
  const std::string_view lower_head = lower.substr(0, marker);
  for (std::string_view label : {"feedback:::", "feedback:"}) {
    const size_t at = lower_head.rfind(label);
    if (at != std::string_view::npos) {
      head = head.substr(at + label.size());
      break;
    }
  }
  return std::string(Trim(head));
}

std::string CallWithRetries(JudgeClient& client, const JudgeRequest& request,
                            const JudgeBatchOptions& options, int* retries) {
  auto backoff = options.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return client.Complete(request);
    } catch (const TransportError&) {
      if (attempt >= options.max_retries) throw;
    }
    ++*retries;
    if (options.sleep) {
      options.sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff = std::chrono::milliseconds(static_cast<int64_t>(
        std::llround(backoff.count() * options.backoff_factor)));
  }
}

// Runs `work(i)` for every index on up to `concurrency` threads.
void ParallelFor(size_t n, int concurrency,
                 const std::function<void(size_t)>& work) {
  const size_t threads =
      std::min(n, static_cast<size_t>(std::max(1, concurrency)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) work(i);
    });
  }
  for (auto& thread : pool) thread.join();
}

}  // namespace

std::string RenderPointwisePrompt(std::string_view question,
                                  std::string_view reference,
                                  std::string_view answer) {
  RequireNonEmpty("question", question);
  RequireNonEmpty("reference", reference);
  RequireNonEmpty("answer", answer);
  return FillTemplate(kPointwiseTemplate, {{"question", question},
                                           {"reference_answer", reference},
                                           {"answer", answer}});
}

std::string RenderPairwisePrompt(std::string_view question,
                                 std::string_view reference,
                                 std::string_view answer_a,
                                 std::string_view answer_b) {
  RequireNonEmpty("question", question);
  RequireNonEmpty("reference", reference);
  RequireNonEmpty("answer_a", answer_a);
  RequireNonEmpty("answer_b", answer_b);
  return FillTemplate(kPairwiseTemplate, {{"question", question},
                                          {"reference_answer", reference},
                                          {"answer_A", answer_a},
                                          {"answer_B", answer_b}});
}

ParsedRating ParseJudgeRating(std::string_view raw) {
  static constexpr std::string_view kMarker = "final rating";
  ParsedRating parsed;
  const std::string lower = ToLower(raw);
  const size_t marker = lower.rfind(kMarker);
  if (marker != std::string::npos) {
    parsed.feedback = ExtractFeedback(raw, lower, marker);
    size_t i = marker + kMarker.size();
    while (i < raw.size() && !IsDigit(raw[i])) ++i;
    if (i < raw.size()) {
      const IntegerToken token = ReadInteger(raw, i);
      if (!token.decimal && token.value >= 1 && token.value <= 5) {
        parsed.rating = static_cast<int>(token.value);
        parsed.parse_ok = true;
      }
      return parsed;
    }
  } else {
    parsed.feedback = ExtractFeedback(raw, lower, raw.size());
  }
  parsed.rating = LastStandaloneRating(raw);
  parsed.parse_ok = parsed.rating.has_value();
  parsed.fallback = parsed.parse_ok;
  return parsed;
}

std::optional<char> ParsePairwiseResult(std::string_view raw) {
  const std::string lower = ToLower(raw);
  const size_t marker = lower.rfind("[result]");
  if (marker == std::string::npos) return std::nullopt;
  size_t i = marker + 8;
  while (i < lower.size() &&
         std::isspace(static_cast<unsigned char>(lower[i]))) {
    ++i;
  }
  if (i >= lower.size() || (lower[i] != 'a' && lower[i] != 'b')) {
    return std::nullopt;
  }
  if (i + 1 < lower.size() && IsAlnum(lower[i + 1])) return std::nullopt;
  return lower[i] == 'a' ? 'A' : 'B';
}

Json ToJson(const JudgeVerdict& v) {
  Json json = {{"model_id", v.model_id}, {"prompt_id", v.prompt_id},
               {"dataset", v.dataset},   {"rater", v.rater},
               {"feedback", v.feedback}, {"raw", v.raw},
               {"parse_ok", v.parse_ok}, {"fallback", v.fallback},
               {"retries", v.retries},   {"reprompted", v.reprompted},
               {"rating", nullptr}};
  if (v.rating) json["rating"] = *v.rating;
  if (!v.error.empty()) json["error"] = v.error;
  return json;
}

JudgeVerdict VerdictFromJson(const Json& json) {
  if (!json.is_object()) throw ValidationError("verdict must be an object");
  JudgeVerdict v;
  try {
    v.model_id = json.at("model_id").get<std::string>();
    v.prompt_id = json.at("prompt_id").get<std::string>();
    v.dataset = json.value("dataset", "");
    v.rater = json.value("rater", "");
    v.feedback = json.value("feedback", "");
    v.raw = json.value("raw", "");
    v.parse_ok = json.value("parse_ok", false);
    v.fallback = json.value("fallback", false);
    v.retries = json.value("retries", 0);
    v.reprompted = json.value("reprompted", false);
    v.error = json.value("error", "");
    if (json.contains("rating") && !json["rating"].is_null()) {
      v.rating = json["rating"].get<int>();
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("verdict: ") + e.what());
  }
  if (v.model_id.empty()) {
    throw ValidationError("model_id", "must be non-empty");
  }
  if (v.parse_ok && (!v.rating || *v.rating < 1 || *v.rating > 5)) {
    throw ValidationError("rating", "must be in 1..5 when parse_ok");
  }
  if (!v.parse_ok) v.rating.reset();
  return v;
}

void SaveVerdicts(const std::filesystem::path& path,
                  const std::vector<JudgeVerdict>& verdicts) {
  std::vector<Json> rows;
  rows.reserve(verdicts.size());
  for (const JudgeVerdict& v : verdicts) rows.push_back(ToJson(v));
  WriteJsonl(path, rows);
}

std::vector<JudgeVerdict> LoadVerdicts(const std::filesystem::path& path) {
  std::vector<JudgeVerdict> out;
  ForEachJsonLine(path, [&](const JsonLine& line) {
    const std::string where =
        path.string() + ":" + std::to_string(line.line_number);
    if (!line.value) throw ValidationError(where + ": " + line.parse_error);
    try {
      out.push_back(VerdictFromJson(*line.value));
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  });
  return out;
}

HttpJudgeConfig HttpJudgeConfigFromEnvironment(std::string model) {
  const char* base = std::getenv("JUDGE_API_BASE");
  const char* key = std::getenv("JUDGE_API_KEY");
  if (base == nullptr || *base == '\0') {
    throw ConfigError("JUDGE_API_BASE is not set");
  }
  if (key == nullptr || *key == '\0') {
    throw ConfigError("JUDGE_API_KEY is not set");
  }
  HttpJudgeConfig config;
  config.api_base = base;
  config.api_key = key;
  config.model = std::move(model);
  return config;
}

HttpJudgeClient::HttpJudgeClient(HttpJudgeConfig config)
    : config_(std::move(config)) {
  const std::string& base = config_.api_base;
  const size_t scheme_end = base.find("://");
  const std::string scheme =
      scheme_end == std::string::npos ? "" : base.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("judge api_base must start with http:// or https://");
  }
  const size_t path_begin = base.find('/', scheme_end + 3);
  scheme_host_port_ = base.substr(0, path_begin);
  if (path_begin != std::string::npos) {
    path_prefix_ = base.substr(path_begin);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') {
      path_prefix_.pop_back();
    }
  }
}

std::string HttpJudgeClient::Complete(const JudgeRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  client.set_bearer_token_auth(config_.api_key);
  const Json body = {
      {"model", config_.model},
      {"temperature", config_.temperature},
      {"max_tokens", config_.max_tokens},
      {"messages",
       Json::array({{{"role", "user"}, {"content", request.prompt}}})}};
  auto result = client.Post(path_prefix_ + "/chat/completions", body.dump(),
                            "application/json");
  if (!result) {
    throw TransportError("judge request failed: " +
                         httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw TransportError("judge returned HTTP " +
                         std::to_string(result->status));
  }
  try {
    const Json reply = Json::parse(result->body);
    return reply.at("choices").at(0).at("message").at("content");
  } catch (const Json::exception& e) {
    throw TransportError(std::string("malformed judge reply: ") + e.what());
  }
}

RecordedJudgeClient::RecordedJudgeClient(const std::filesystem::path& path) {
  ForEachJsonLine(path, [&](const JsonLine& line) {
    const std::string where =
        path.string() + ":" + std::to_string(line.line_number);
    if (!line.value) throw ValidationError(where + ": " + line.parse_error);
    const Json& row = *line.value;
    std::vector<std::string> replies;
    try {
      if (row.contains("responses")) {
        replies = row.at("responses").get<std::vector<std::string>>();
      } else {
        replies.push_back(row.at("response").get<std::string>());
      }
      if (replies.empty()) throw ValidationError(where + ": empty responses");
      responses_[{row.at("model_id").get<std::string>(),
                  row.at("prompt_id").get<std::string>()}] = std::move(replies);
    } catch (const Json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  });
}

RecordedJudgeClient::RecordedJudgeClient(
    std::map<std::pair<std::string, std::string>, std::vector<std::string>>
        responses)
    : responses_(std::move(responses)) {}

std::string RecordedJudgeClient::Complete(const JudgeRequest& request) {
  std::lock_guard<std::mutex> lock(mu_);
  const auto key = std::make_pair(request.model_id, request.prompt_id);
  auto it = responses_.find(key);
  if (it == responses_.end() || it->second.empty()) {
    throw TransportError("no recorded judge response for model " +
                         request.model_id + ", prompt " + request.prompt_id);
  }
  size_t& served = served_[key];
  const std::string& reply =
      it->second[std::min(served, it->second.size() - 1)];
  ++served;
  return reply;
}

std::vector<JudgeVerdict> JudgeBatch(JudgeClient& client,
                                     const std::vector<JudgeItem>& items,
                                     const JudgeBatchOptions& options) {
  std::vector<JudgeVerdict> verdicts(items.size());
  ParallelFor(items.size(), options.concurrency, [&](size_t i) {
    const JudgeItem& item = items[i];
    JudgeVerdict& v = verdicts[i];
    v.model_id = item.model_id;
    v.prompt_id = item.prompt_id;
    v.dataset = item.dataset;
    v.rater = options.rater;
    try {
      const JudgeRequest request{
          item.model_id, item.prompt_id,
          RenderPointwisePrompt(item.question, item.reference, item.answer)};
      v.raw = CallWithRetries(client, request, options, &v.retries);
      ParsedRating parsed = ParseJudgeRating(v.raw);
      if (!parsed.parse_ok && options.reprompt_on_parse_failure) {
        v.reprompted = true;
        v.raw = CallWithRetries(client, request, options, &v.retries);
        parsed = ParseJudgeRating(v.raw);
      }
      v.feedback = std::move(parsed.feedback);
      v.rating = parsed.rating;
      v.parse_ok = parsed.parse_ok;
      v.fallback = parsed.fallback;
      if (!v.parse_ok) v.error = "unparseable judge output";
    } catch (const std::exception& e) {
      v.parse_ok = false;
      v.rating.reset();
      v.error = e.what();
    }
  });
  return verdicts;
}

std::vector<PairwiseVerdict> JudgePairwiseBatch(
    JudgeClient& client, const std::vector<PairwiseItem>& items,
    const JudgeBatchOptions& options) {
  std::vector<PairwiseVerdict> verdicts(items.size());
  ParallelFor(items.size(), options.concurrency, [&](size_t i) {
    const PairwiseItem& item = items[i];
    PairwiseVerdict& v = verdicts[i];
    v.item = item;
    try {
      const JudgeRequest request{
          item.model_a + "|" + item.model_b, item.prompt_id,
          RenderPairwisePrompt(item.question, item.reference, item.answer_a,
                               item.answer_b)};
      v.raw = CallWithRetries(client, request, options, &v.retries);
      v.winner = ParsePairwiseResult(v.raw);
      if (!v.winner && options.reprompt_on_parse_failure) {
        v.raw = CallWithRetries(client, request, options, &v.retries);
        v.winner = ParsePairwiseResult(v.raw);
      }
      if (!v.winner) v.error = "unparseable judge output";
    } catch (const std::exception& e) {
      v.winner.reset();
      v.error = e.what();
    }
  });
  return verdicts;
}

}  // namespace longform::eval
