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

// HTTP JSON API over an AnnotationStore:
//   GET  /sessions?annotator=ID   session list with per-annotator revision
//   GET  /sessions/{id}           anonymized session payload
//   POST /annotations             submit or replace an annotation
//   GET  /export                  JSONL export with model ids (admin token)
// Every route requires "Authorization: Bearer <token>".

#ifndef LONGFORM_ANNOTATION_SERVER_H_
#define LONGFORM_ANNOTATION_SERVER_H_

#include <map>
#include <memory>
#include <string>
#include <thread>

#include "longform/annotation/store.h"

namespace httplib {
class Server;
}  // namespace httplib

namespace longform::annotation {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::map<std::string, std::string> tokens;  // token -> annotator id
  std::string admin_token;  // required for /export; empty disables export
  std::string cors_origin = "*";
};

class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, ServerConfig config);
  ~AnnotationServer();

  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Binds and serves on a background thread; returns the bound port. Throws
  // TransportError when the address cannot be bound.
  int Start();
  // Binds and serves on the calling thread until Stop().
  void Run();
  void Stop();

 private:
  int Bind();

  AnnotationStore& store_;
  ServerConfig config_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace longform::annotation

#endif  // LONGFORM_ANNOTATION_SERVER_H_
