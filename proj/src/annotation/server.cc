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

#include "longform/annotation/server.h"

#include <optional>
#include <string_view>

#include <httplib.h>

#include "longform/common/error.h"

namespace longform::annotation {
namespace {

struct Caller {
  std::string annotator;  // empty for the admin token
  bool admin = false;
};

void SendJson(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, std::string_view kind,
               const std::string& message,
               const std::vector<FieldError>& fields = {}) {
  Json body = {{"error", kind}, {"message", message}};
  if (!fields.empty()) {
    Json list = Json::array();
    for (const FieldError& f : fields) {
      list.push_back({{"path", f.path}, {"message", f.message}});
    }
    body["fields"] = std::move(list);
  }
  SendJson(res, status, body);
}

std::optional<Caller> Authenticate(const ServerConfig& config,
                                   const httplib::Request& req,
                                   httplib::Response& res) {
  static constexpr std::string_view kBearer = "Bearer ";
  const std::string header = req.get_header_value("Authorization");
  if (header.starts_with(kBearer)) {
    const std::string token = header.substr(kBearer.size());
    if (!config.admin_token.empty() && token == config.admin_token) {
      return Caller{"", true};
    }
    if (auto it = config.tokens.find(token); it != config.tokens.end()) {
      return Caller{it->second, false};
    }
  }
  res.set_header("WWW-Authenticate", "Bearer");
  SendError(res, 401, "unauthorized", "missing or invalid bearer token");
  return std::nullopt;
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationStore& store, ServerConfig config)
    : store_(store),
      config_(std::move(config)),
      server_(std::make_unique<httplib::Server>()) {
  httplib::Server& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                         {"Vary", "Origin"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers",
                   "Authorization, Content-Type");
    res.set_header("Access-Control-Max-Age", "600");
    res.status = 204;
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                             std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    SendError(res, 500, "internal", message);
  });

  s.Get("/sessions", [this](const httplib::Request& req,
                            httplib::Response& res) {
    auto caller = Authenticate(config_, req, res);
    if (!caller) return;
    const std::string annotator = req.get_param_value("annotator");
    if (annotator.empty()) {
      SendError(res, 400, "validation", "annotator query parameter required",
                {{"annotator", "required"}});
      return;
    }
    if (!caller->admin && caller->annotator != annotator) {
      SendError(res, 403, "forbidden", "token does not belong to " + annotator);
      return;
    }
    Json list = Json::array();
    int completed = 0;
    for (const SessionStatus& st : store_.SessionsFor(annotator)) {
      if (st.revision > 0) ++completed;
      list.push_back({{"session_id", st.session_id},
                      {"prompt_id", st.prompt_id},
                      {"revision", st.revision},
                      {"submitted", st.revision > 0}});
    }
    SendJson(res, 200,
             {{"annotator", annotator},
              {"total", list.size()},
              {"completed", completed},
              {"sessions", std::move(list)}});
  });

  s.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req,
                                       httplib::Response& res) {
    if (!Authenticate(config_, req, res)) return;
    const std::string id = req.matches[1];
    const auto session = store_.GetSession(id);
    if (!session) {
      SendError(res, 404, "not_found", "unknown session " + id);
      return;
    }
    SendJson(res, 200, ToClientJson(*session));
  });

  s.Post("/annotations", [this](const httplib::Request& req,
                                httplib::Response& res) {
    auto caller = Authenticate(config_, req, res);
    if (!caller) return;
    if (caller->admin) {
      SendError(res, 403, "forbidden", "admin token cannot submit annotations");
      return;
    }
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::exception& e) {
      SendError(res, 400, "validation", std::string("malformed JSON: ") + e.what());
      return;
    }
    try {
      AnnotationRecord record = AnnotationRecordFromJson(body);
      if (!record.annotator_id.empty() &&
          record.annotator_id != caller->annotator) {
        SendError(res, 403, "forbidden",
                  "annotator_id does not match the bearer token");
        return;
      }
      record.annotator_id = caller->annotator;
      record.submitted_at = UtcNow();
      const SubmitAck ack = store_.Submit(record);
      SendJson(res, 200,
               {{"session_id", ack.session_id},
                {"annotator_id", ack.annotator_id},
                {"revision", ack.revision},
                {"audit_length", ack.audit_length}});
    } catch (const ValidationError& e) {
      SendError(res, 400, e.kind(), e.what(), e.fields());
    } catch (const NotFoundError& e) {
      SendError(res, 404, e.kind(), e.what());
    }
  });

  s.Get("/export", [this](const httplib::Request& req,
                          httplib::Response& res) {
    auto caller = Authenticate(config_, req, res);
    if (!caller) return;
    if (!caller->admin) {
      SendError(res, 403, "forbidden", "export requires the admin token");
      return;
    }
    const ExportResult result = store_.Export();
    std::string body;
    for (const ExportRow& row : result.rows) {
      body += ToJson(row).dump();
      body += '\n';
    }
    res.set_header("X-Orphans-Skipped", std::to_string(result.orphans_skipped));
    res.status = 200;
    res.set_content(body, "application/x-ndjson");
  });
}

AnnotationServer::~AnnotationServer() { Stop(); }

int AnnotationServer::Bind() {
  if (config_.port == 0) {
    const int port = server_->bind_to_any_port(config_.host);
    if (port < 0) throw TransportError("cannot bind " + config_.host);
    return port;
  }
  if (!server_->bind_to_port(config_.host, config_.port)) {
    throw TransportError("cannot bind " + config_.host + ":" +
                         std::to_string(config_.port));
  }
  return config_.port;
}

int AnnotationServer::Start() {
  const int port = Bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void AnnotationServer::Run() {
  Bind();
  server_->listen_after_bind();
}

void AnnotationServer::Stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace longform::annotation
