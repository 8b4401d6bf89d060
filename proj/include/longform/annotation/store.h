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

// Blind human-annotation sessions and their append-only JSONL store.

#ifndef LONGFORM_ANNOTATION_STORE_H_
#define LONGFORM_ANNOTATION_STORE_H_

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "longform/common/jsonl.h"
#include "longform/corpus/corpus.h"
#include "longform/eval/judge.h"

namespace longform::annotation {

struct SessionItem {
  std::string slot_label;
  std::string response_text;
  std::string hidden_model_id;
};

struct AnnotationSession {
  std::string session_id;
  std::string prompt_id;
  std::string dataset;
  std::string question;
  std::vector<SessionItem> items;
  uint64_t assignment_seed = 0;
};

// Payload for annotators: no model identifiers.
Json ToClientJson(const AnnotationSession& session);
// Full record for the store.
Json ToStoreJson(const AnnotationSession& session);
AnnotationSession SessionFromStoreJson(const Json& json);

// model -> prompt id -> response text.
using ResponseTable = std::map<std::string, std::map<std::string, std::string>>;

// One session per prompt; slot order is a permutation drawn from a generator
// seeded by (seed, prompt id). Throws ValidationError listing every missing
// (model, prompt) response.
std::vector<AnnotationSession> CreateSessions(
    const std::vector<corpus::PromptRecord>& prompts,
    const ResponseTable& responses, uint64_t seed);

struct AnnotationRecord {
  std::string session_id;
  std::string annotator_id;
  std::map<std::string, int> scores;  // slot -> 1..5
  std::vector<std::string> ranking;   // best first, strict permutation
  std::map<std::string, std::string> comments;
  std::string submitted_at;  // ISO-8601 UTC
};

Json ToJson(const AnnotationRecord& record);
// Throws ValidationError with field paths for malformed payloads.
AnnotationRecord AnnotationRecordFromJson(const Json& json);

// Checks scores, ranking and comments against the session's slots. Throws
// ValidationError with one FieldError per problem.
void ValidateRecord(const AnnotationRecord& record,
                    const AnnotationSession& session);

struct SubmitAck {
  std::string session_id;
  std::string annotator_id;
  int revision = 0;
  int audit_length = 0;
};

struct AuditEntry {
  int revision = 0;
  std::string submitted_at;
};

struct SessionStatus {
  std::string session_id;
  std::string prompt_id;
  int revision = 0;  // 0 when not yet submitted
};

struct ExportRow {
  std::string session_id;
  std::string prompt_id;
  std::string dataset;
  std::string annotator_id;
  std::string slot_label;
  std::string model_id;
  int score = 0;
  int rank = 0;  // 1 = best
  std::string comment;
  int revision = 0;
};

Json ToJson(const ExportRow& row);
ExportRow ExportRowFromJson(const Json& json);

struct ExportResult {
  std::vector<ExportRow> rows;
  int orphans_skipped = 0;
};

// Human ratings as verdicts (rater = annotator) so the judge aggregation
// code path consumes them unchanged.
std::vector<eval::JudgeVerdict> ExportToVerdicts(
    const std::vector<ExportRow>& rows);

// sessions.jsonl holds sessions; annotations.jsonl holds every submission
// with its revision, so the latest row per (session, annotator) wins and the
// earlier rows form the audit trail. Safe for concurrent use.
class AnnotationStore {
 public:
  // Opens (creating if needed) the store directory and replays both files.
  explicit AnnotationStore(std::filesystem::path dir);

  // Appends sessions. Throws ValidationError on a duplicate session id.
  void AddSessions(const std::vector<AnnotationSession>& sessions);

  std::optional<AnnotationSession> GetSession(const std::string& id) const;
  std::vector<SessionStatus> SessionsFor(const std::string& annotator) const;
  size_t session_count() const;

  // Throws NotFoundError for an unknown session, ValidationError for an
  // invalid record.
  SubmitAck Submit(const AnnotationRecord& record);

  std::vector<AuditEntry> Audit(const std::string& session_id,
                                const std::string& annotator_id) const;

  // One row per slot of the latest record for each (session, annotator).
  ExportResult Export() const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  using Key = std::pair<std::string, std::string>;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::vector<AnnotationSession> sessions_;
  std::map<std::string, size_t> session_index_;
  std::map<Key, AnnotationRecord> latest_;
  std::map<Key, std::vector<AuditEntry>> audit_;
};

// Current time as ISO-8601 UTC with second precision.
std::string UtcNow();

}  // namespace longform::annotation

#endif  // LONGFORM_ANNOTATION_STORE_H_
