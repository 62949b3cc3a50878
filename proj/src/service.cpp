// Copyright 2026 The mmrag Authors.
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

#include "mmrag/service.hpp"

#include <chrono>
#include <set>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "mmrag/error.hpp"

using nlohmann::json;

namespace mmrag {

namespace {

std::vector<double> read_vector(const json& v, const char* name) {
  if (!v.is_array()) throw Error(ErrorCode::SchemaError, std::string("vectors.") + name + " must be an array");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) throw Error(ErrorCode::SchemaError, std::string("vectors.") + name + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

struct ParsedRequest {
  QueryInput input;
  RetrievalMode mode = RetrievalMode::DynamicHybrid;
  GenerationMode generation = GenerationMode::MultiAgent;
  bool include_trace = false;
};

ParsedRequest parse_request(const std::string& body, bool allow_generation) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("request body is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "request body must be an object");
  std::set<std::string> allowed{"uid", "query_id", "query", "mode", "vectors"};
  if (allow_generation) allowed.insert({"generation", "include_trace"});
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw Error(ErrorCode::SchemaError, "unknown field \"" + key + "\"");
  }
  auto str = [&](const char* key) -> std::string {
    if (!j.contains(key)) return {};
    if (!j[key].is_string()) throw Error(ErrorCode::SchemaError, std::string(key) + " must be a string");
    return j[key].get<std::string>();
  };

  ParsedRequest r;
  r.input.uid = str("uid");
  if (r.input.uid.empty()) r.input.uid = str("query_id");
  r.input.text = str("query");
  if (r.input.uid.empty() && r.input.text.empty()) throw Error(ErrorCode::SchemaError, "need \"uid\" or \"query\"");
  if (const std::string mode = str("mode"); !mode.empty()) r.mode = parse_retrieval_mode(mode);
  if (const std::string gen = str("generation"); !gen.empty()) r.generation = parse_generation_mode(gen);
  if (j.contains("include_trace")) {
    if (!j["include_trace"].is_boolean()) throw Error(ErrorCode::SchemaError, "include_trace must be a boolean");
    r.include_trace = j["include_trace"].get<bool>();
  }
  if (j.contains("vectors")) {
    const json& v = j["vectors"];
    if (!v.is_object()) throw Error(ErrorCode::SchemaError, "vectors must be an object");
    for (const auto& [key, value] : v.items()) {
      if (key == "visual") r.input.vectors.visual = read_vector(value, "visual");
      else if (key == "textual") r.input.vectors.textual = read_vector(value, "textual");
      else throw Error(ErrorCode::SchemaError, "unknown modality \"" + key + "\" in vectors");
    }
  }
  return r;
}

Service::Reply error_reply(const Error& e, const std::string& request_id) {
  return {http_status_for(e.code()),
          json{{"error", to_string(e.code())}, {"message", e.what()}, {"request_id", request_id}}};
}

template <typename F>
Service::Reply guarded(const char* route, const std::string& request_id, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  Service::Reply reply;
  try {
    reply = f();
  } catch (const Error& e) {
    reply = error_reply(e, request_id);
  } catch (const std::exception& e) {
    reply = {500, json{{"error", "Internal"}, {"message", e.what()}, {"request_id", request_id}}};
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  spdlog::info("[{}] {} -> {} ({:.1f} ms)", request_id, route, reply.status, ms);
  return reply;
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::MissingModality:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::ZeroVector:
    case ErrorCode::NonFinite:
      return 400;
    case ErrorCode::UnknownQuery:
    case ErrorCode::UnknownPage:
      return 404;
    case ErrorCode::Transport:
    case ErrorCode::AuthFailure:
    case ErrorCode::ContextOverflow:
    case ErrorCode::BackendError:
    case ErrorCode::TranscriptExhausted:
    case ErrorCode::MatcherMismatch:
      return 503;
    default:
      return 500;
  }
}

Service::Reply Service::retrieve(const std::string& body, const std::string& request_id) const {
  return guarded("POST /retrieve", request_id, [&] {
    const ParsedRequest r = parse_request(body, false);
    json out = to_json(engine_->retrieve(r.input, r.mode));
    out["schema_version"] = kServiceSchemaVersion;
    out["request_id"] = request_id;
    return Reply{200, std::move(out)};
  });
}

Service::Reply Service::ask(const std::string& body, const std::string& request_id) const {
  return guarded("POST /ask", request_id, [&] {
    const ParsedRequest r = parse_request(body, true);
    WorkflowResult result = engine_->ask(r.input, r.mode, r.generation);
    // A workflow that aborted on a backend failure surfaces as unavailable.
    if (result.termination == Termination::Aborted && !result.error.empty()) {
      return Reply{503, json{{"error", "BackendError"}, {"message", result.error}, {"request_id", request_id}}};
    }
    json out = to_json(result);
    out["mode"] = to_string(r.mode);
    out["generation"] = to_string(r.generation);
    if (r.include_trace) out["trace"] = result.trace.events();
    out["schema_version"] = kServiceSchemaVersion;
    out["request_id"] = request_id;
    return Reply{200, std::move(out)};
  });
}

Service::Reply Service::health() const {
  const Corpus& c = engine_->corpus();
  json modalities = json::array();
  for (Modality m : kModalities) {
    if (const EmbeddingTable* t = c.embeddings(m); t && t->size() > 0) modalities.push_back(to_string(m));
  }
  return {200, json{{"status", "ok"},
                    {"schema_version", kServiceSchemaVersion},
                    {"documents", c.documents().size()},
                    {"pages", c.pages().size()},
                    {"chunks", c.chunk_count()},
                    {"queries", c.queries().size()},
                    {"modalities", modalities}}};
}

std::string Service::next_request_id() { return "req-" + std::to_string(++counter_); }

void Service::install(httplib::Server& server) {
  auto respond = [](httplib::Response& res, const Reply& reply, const std::string& request_id) {
    res.status = reply.status;
    res.set_header("X-Request-Id", request_id);
    res.set_content(reply.body.dump(), "application/json");
  };
  auto request_id = [this](const httplib::Request& req) {
    return req.has_header("X-Request-Id") ? req.get_header_value("X-Request-Id") : next_request_id();
  };
  server.Post("/retrieve", [=, this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = request_id(req);
    respond(res, retrieve(req.body, id), id);
  });
  server.Post("/ask", [=, this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = request_id(req);
    respond(res, ask(req.body, id), id);
  });
  server.Get("/healthz", [=, this](const httplib::Request& req, httplib::Response& res) {
    respond(res, health(), request_id(req));
  });
}

void serve(std::shared_ptr<const Engine> engine, const std::string& host, int port) {
  Service service(std::move(engine));
  httplib::Server server;
  service.install(server);
  spdlog::info("listening on {}:{}", host, port);
  if (!server.listen(host, port)) {
    throw Error(ErrorCode::Transport, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace mmrag
