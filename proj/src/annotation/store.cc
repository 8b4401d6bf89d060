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

#include "longform/annotation/store.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>

#include "longform/common/error.h"
#include "longform/common/rng.h"
#include "longform/common/text.h"

namespace longform::annotation {
namespace {

constexpr char kSessionsFile[] = "sessions.jsonl";
constexpr char kAnnotationsFile[] = "annotations.jsonl";

std::string Hex64(uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

template <typename T>
void ReadField(const Json& json, const char* key, T* out,
               std::vector<FieldError>* errors, bool required = true) {
  if (!json.contains(key)) {
    if (required) errors->push_back({key, "required"});
    return;
  }
  try {
    *out = json.at(key).get<T>();
  } catch (const Json::exception&) {
    errors->push_back({key, "has the wrong type"});
  }
}

}  // namespace

Json ToClientJson(const AnnotationSession& session) {
  Json items = Json::array();
  for (const SessionItem& item : session.items) {
    items.push_back({{"slot_label", item.slot_label},
                     {"response_text", item.response_text}});
  }
  return {{"session_id", session.session_id},
          {"prompt_id", session.prompt_id},
          {"dataset", session.dataset},
          {"question", session.question},
          {"items", std::move(items)}};
}

Json ToStoreJson(const AnnotationSession& session) {
  Json json = ToClientJson(session);
  for (size_t i = 0; i < session.items.size(); ++i) {
    json["items"][i]["hidden_model_id"] = session.items[i].hidden_model_id;
  }
  json["assignment_seed"] = session.assignment_seed;
  return json;
}

AnnotationSession SessionFromStoreJson(const Json& json) {
  AnnotationSession s;
  try {
    s.session_id = json.at("session_id").get<std::string>();
    s.prompt_id = json.at("prompt_id").get<std::string>();
    s.dataset = json.value("dataset", "");
    s.question = json.at("question").get<std::string>();
    s.assignment_seed = json.value("assignment_seed", uint64_t{0});
    for (const Json& item : json.at("items")) {
      s.items.push_back({item.at("slot_label").get<std::string>(),
                         item.at("response_text").get<std::string>(),
                         item.at("hidden_model_id").get<std::string>()});
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("session: ") + e.what());
  }
  return s;
}

std::vector<AnnotationSession> CreateSessions(
    const std::vector<corpus::PromptRecord>& prompts,
    const ResponseTable& responses, uint64_t seed) {
  if (responses.empty()) throw ValidationError("responses", "no models");
  if (responses.size() > 26) {
    throw ValidationError("responses", "at most 26 models per session");
  }
  std::vector<FieldError> gaps;
  std::set<std::string> seen;
  for (const corpus::PromptRecord& prompt : prompts) {
    if (!seen.insert(prompt.id).second) {
      gaps.push_back({"prompts." + prompt.id, "duplicate prompt id"});
    }
    for (const auto& [model, by_prompt] : responses) {
      if (!by_prompt.contains(prompt.id)) {
        gaps.push_back({"responses." + model + "." + prompt.id,
                        "missing response for model " + model +
                            " on prompt " + prompt.id});
      }
    }
  }
  if (!gaps.empty()) throw ValidationError(std::move(gaps));

  const uint64_t base = Fnv1a64(std::to_string(seed));
  std::vector<AnnotationSession> sessions;
  for (const corpus::PromptRecord& prompt : prompts) {
    AnnotationSession s;
    s.prompt_id = prompt.id;
    s.dataset = std::string(corpus::SourceName(prompt.source));
    s.question = prompt.instruction;
    s.assignment_seed = Fnv1a64(prompt.id, base);
    s.session_id = "s" + Hex64(Fnv1a64("session:" + prompt.id, base));
    std::vector<std::string> order;
    for (const auto& [model, by_prompt] : responses) order.push_back(model);
    Rng rng(s.assignment_seed);
    rng.Shuffle(order);
    for (size_t i = 0; i < order.size(); ++i) {
      s.items.push_back({std::string(1, static_cast<char>('A' + i)),
                         responses.at(order[i]).at(prompt.id), order[i]});
    }
    sessions.push_back(std::move(s));
  }
  return sessions;
}

Json ToJson(const AnnotationRecord& r) {
  return {{"session_id", r.session_id}, {"annotator_id", r.annotator_id},
          {"scores", r.scores},         {"ranking", r.ranking},
          {"comments", r.comments},     {"submitted_at", r.submitted_at}};
}

AnnotationRecord AnnotationRecordFromJson(const Json& json) {
  if (!json.is_object()) throw ValidationError("body", "must be a JSON object");
  AnnotationRecord r;
  std::vector<FieldError> errors;
  ReadField(json, "session_id", &r.session_id, &errors);
  ReadField(json, "annotator_id", &r.annotator_id, &errors, false);
  ReadField(json, "submitted_at", &r.submitted_at, &errors, false);
  ReadField(json, "comments", &r.comments, &errors, false);
  if (!json.contains("scores") || !json["scores"].is_object()) {
    errors.push_back({"scores", "must be an object of slot -> integer"});
  } else {
    for (const auto& [slot, value] : json["scores"].items()) {
      if (!value.is_number_integer()) {
        errors.push_back({"scores." + slot, "must be an integer in 1..5"});
      } else {
        r.scores[slot] = value.get<int>();
      }
    }
  }
  ReadField(json, "ranking", &r.ranking, &errors);
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return r;
}

void ValidateRecord(const AnnotationRecord& record,
                    const AnnotationSession& session) {
  std::vector<FieldError> errors;
  if (Trim(record.annotator_id).empty()) {
    errors.push_back({"annotator_id", "required"});
  }
  std::vector<std::string> slots;
  for (const SessionItem& item : session.items) slots.push_back(item.slot_label);
  const std::set<std::string> slot_set(slots.begin(), slots.end());

  for (const std::string& slot : slots) {
    auto it = record.scores.find(slot);
    if (it == record.scores.end()) {
      errors.push_back({"scores." + slot, "missing score"});
    } else if (it->second < 1 || it->second > 5) {
      errors.push_back({"scores." + slot, "must be an integer in 1..5"});
    }
  }
  for (const auto& [slot, score] : record.scores) {
    if (!slot_set.contains(slot)) {
      errors.push_back({"scores." + slot, "unknown slot"});
    }
  }
  std::set<std::string> ranked;
  for (size_t i = 0; i < record.ranking.size(); ++i) {
    const std::string path = "ranking[" + std::to_string(i) + "]";
    const std::string& slot = record.ranking[i];
    if (!slot_set.contains(slot)) {
      errors.push_back({path, "unknown slot " + slot});
    } else if (!ranked.insert(slot).second) {
      errors.push_back({path, "duplicate slot " + slot});
    }
  }
  for (const std::string& slot : slots) {
    if (!ranked.contains(slot)) {
      errors.push_back({"ranking", "missing slot " + slot});
    }
  }
  for (const auto& [slot, text] : record.comments) {
    if (!slot_set.contains(slot)) {
      errors.push_back({"comments." + slot, "unknown slot"});
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

Json ToJson(const ExportRow& r) {
  return {{"session_id", r.session_id},     {"prompt_id", r.prompt_id},
          {"dataset", r.dataset},           {"annotator_id", r.annotator_id},
          {"slot_label", r.slot_label},     {"model_id", r.model_id},
          {"score", r.score},               {"rank", r.rank},
          {"comment", r.comment},           {"revision", r.revision}};
}

ExportRow ExportRowFromJson(const Json& json) {
  ExportRow r;
  try {
    r.session_id = json.at("session_id").get<std::string>();
    r.prompt_id = json.at("prompt_id").get<std::string>();
    r.dataset = json.value("dataset", "");
    r.annotator_id = json.at("annotator_id").get<std::string>();
    r.slot_label = json.at("slot_label").get<std::string>();
    r.model_id = json.at("model_id").get<std::string>();
    r.score = json.at("score").get<int>();
    r.rank = json.at("rank").get<int>();
    r.comment = json.value("comment", "");
    r.revision = json.value("revision", 0);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("export row: ") + e.what());
  }
  return r;
}

std::vector<eval::JudgeVerdict> ExportToVerdicts(
    const std::vector<ExportRow>& rows) {
  std::vector<eval::JudgeVerdict> verdicts;
  verdicts.reserve(rows.size());
  for (const ExportRow& row : rows) {
    eval::JudgeVerdict v;
    v.model_id = row.model_id;
    v.prompt_id = row.prompt_id;
    v.dataset = row.dataset;
    v.rater = row.annotator_id;
    v.feedback = row.comment;
    v.rating = row.score;
    v.parse_ok = row.score >= 1 && row.score <= 5;
    if (!v.parse_ok) v.rating.reset();
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

AnnotationStore::AnnotationStore(std::filesystem::path dir)
    : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  const auto sessions_path = dir_ / kSessionsFile;
  if (std::filesystem::exists(sessions_path)) {
    ForEachJsonLine(sessions_path, [&](const JsonLine& line) {
      if (!line.value) {
        throw IoError(sessions_path.string() + ":" +
                      std::to_string(line.line_number) + ": " +
                      line.parse_error);
      }
      AnnotationSession s = SessionFromStoreJson(*line.value);
      session_index_[s.session_id] = sessions_.size();
      sessions_.push_back(std::move(s));
    });
  }
  const auto annotations_path = dir_ / kAnnotationsFile;
  if (std::filesystem::exists(annotations_path)) {
    ForEachJsonLine(annotations_path, [&](const JsonLine& line) {
      if (!line.value) {
        throw IoError(annotations_path.string() + ":" +
                      std::to_string(line.line_number) + ": " +
                      line.parse_error);
      }
      AnnotationRecord r = AnnotationRecordFromJson(line.value->at("record"));
      const Key key{r.session_id, r.annotator_id};
      audit_[key].push_back(
          {line.value->at("revision").get<int>(), r.submitted_at});
      latest_[key] = std::move(r);
    });
  }
}

void AnnotationStore::AddSessions(
    const std::vector<AnnotationSession>& sessions) {
  std::lock_guard<std::mutex> lock(mu_);
  std::set<std::string> incoming;
  for (const AnnotationSession& s : sessions) {
    if (session_index_.contains(s.session_id) ||
        !incoming.insert(s.session_id).second) {
      throw ValidationError("sessions", "duplicate session id " + s.session_id);
    }
  }
  for (const AnnotationSession& s : sessions) {
    AppendJsonl(dir_ / kSessionsFile, ToStoreJson(s));
    session_index_[s.session_id] = sessions_.size();
    sessions_.push_back(s);
  }
}

std::optional<AnnotationSession> AnnotationStore::GetSession(
    const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = session_index_.find(id);
  if (it == session_index_.end()) return std::nullopt;
  return sessions_[it->second];
}

std::vector<SessionStatus> AnnotationStore::SessionsFor(
    const std::string& annotator) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<SessionStatus> out;
  for (const AnnotationSession& s : sessions_) {
    auto it = audit_.find({s.session_id, annotator});
    out.push_back({s.session_id, s.prompt_id,
                   it == audit_.end() ? 0 : it->second.back().revision});
  }
  return out;
}

size_t AnnotationStore::session_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return sessions_.size();
}

SubmitAck AnnotationStore::Submit(const AnnotationRecord& input) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = session_index_.find(input.session_id);
  if (it == session_index_.end()) {
    throw NotFoundError("unknown session " + input.session_id);
  }
  ValidateRecord(input, sessions_[it->second]);
  AnnotationRecord record = input;
  if (record.submitted_at.empty()) record.submitted_at = UtcNow();
  const Key key{record.session_id, record.annotator_id};
  std::vector<AuditEntry>& trail = audit_[key];
  const int revision = trail.empty() ? 1 : trail.back().revision + 1;
  AppendJsonl(dir_ / kAnnotationsFile,
              {{"revision", revision}, {"record", ToJson(record)}});
  trail.push_back({revision, record.submitted_at});
  latest_[key] = std::move(record);
  return {key.first, key.second, revision, static_cast<int>(trail.size())};
}

std::vector<AuditEntry> AnnotationStore::Audit(
    const std::string& session_id, const std::string& annotator_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = audit_.find({session_id, annotator_id});
  return it == audit_.end() ? std::vector<AuditEntry>{} : it->second;
}

ExportResult AnnotationStore::Export() const {
  std::lock_guard<std::mutex> lock(mu_);
  ExportResult result;
  for (const auto& [key, record] : latest_) {
    auto it = session_index_.find(key.first);
    if (it == session_index_.end()) {
      ++result.orphans_skipped;
      continue;
    }
    const AnnotationSession& session = sessions_[it->second];
    try {
      ValidateRecord(record, session);
    } catch (const ValidationError&) {
      ++result.orphans_skipped;
      continue;
    }
    const int revision = audit_.at(key).back().revision;
    for (const SessionItem& item : session.items) {
      ExportRow row;
      row.session_id = session.session_id;
      row.prompt_id = session.prompt_id;
      row.dataset = session.dataset;
      row.annotator_id = record.annotator_id;
      row.slot_label = item.slot_label;
      row.model_id = item.hidden_model_id;
      row.score = record.scores.at(item.slot_label);
      row.rank = static_cast<int>(std::find(record.ranking.begin(),
                                            record.ranking.end(),
                                            item.slot_label) -
                                  record.ranking.begin()) +
                 1;
      if (auto c = record.comments.find(item.slot_label);
          c != record.comments.end()) {
        row.comment = c->second;
      }
      row.revision = revision;
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

std::string UtcNow() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace longform::annotation
