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

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "mmrag/engine.hpp"
#include "mmrag/error.hpp"

namespace httplib {
class Server;
}

namespace mmrag {

inline constexpr int kServiceSchemaVersion = 1;

// JSON over HTTP:
//   POST /retrieve  {"uid" | "query", "mode", "vectors"?}
//   POST /ask       {"uid" | "query", "mode", "generation"?, "vectors"?, "include_trace"?}
//   GET  /healthz
// Errors come back as {"error": code, "message", "request_id"}: 400 for bad
// requests, 404 for unknown queries, 503 when a model backend fails.
class Service {
 public:
  struct Reply {
    int status = 200;
    nlohmann::json body;
  };

  explicit Service(std::shared_ptr<const Engine> engine) : engine_(std::move(engine)) {}

  Reply retrieve(const std::string& body, const std::string& request_id) const;
  Reply ask(const std::string& body, const std::string& request_id) const;
  Reply health() const;

  void install(httplib::Server& server);
  std::string next_request_id();

 private:
  std::shared_ptr<const Engine> engine_;
  std::atomic<std::uint64_t> counter_{0};
};

int http_status_for(ErrorCode code);

// Blocks until the server stops.
void serve(std::shared_ptr<const Engine> engine, const std::string& host, int port);

}  // namespace mmrag
