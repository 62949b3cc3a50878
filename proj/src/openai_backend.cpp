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

#include "mmrag/openai_backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "mmrag/error.hpp"

using nlohmann::json;

namespace mmrag {

namespace {

// "https://host:443/v1" -> {"https://host:443", "/v1"}
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  const std::size_t path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  std::string origin = path == std::string::npos ? url : url.substr(0, path);
  std::string prefix = path == std::string::npos ? "" : url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (prefix.empty()) prefix = "/v1";
  return {origin, prefix};
}

bool looks_like_context_overflow(int status, const std::string& body) {
  if (status == 413) return true;
  return body.find("context_length_exceeded") != std::string::npos ||
         body.find("maximum context length") != std::string::npos;
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& s_;
};

}  // namespace

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(std::max(1.0, burst)), tokens_(burst_), last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
  if (rate_ <= 0.0) return;
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

json build_chat_body(const ChatRequest& request, const std::string& model, const ImageLoader& images) {
  json messages = json::array();
  if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  for (const ChatTurn& turn : request.turns) {
    json content = json::array();
    for (const ContentPart& part : turn.parts) {
      if (const auto* text = std::get_if<std::string>(&part)) {
        content.push_back({{"type", "text"}, {"text", *text}});
      } else {
        const auto& img = std::get<ImageRef>(part);
        if (!images) throw Error(ErrorCode::InvalidArgument, "request has images but no image loader is configured");
        content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", images(img)}, {"detail", img.resolution == ImageResolution::Thumbnail ? "low" : "high"}}}});
      }
    }
    messages.push_back({{"role", turn.role}, {"content", content}});
  }
  return json{{"model", model},
              {"messages", messages},
              {"temperature", request.decoding.temperature},
              {"max_tokens", request.decoding.max_tokens}};
}

std::string parse_chat_completion(const json& body, Usage* usage) {
  if (!body.is_object() || !body.contains("choices") || !body.at("choices").is_array() ||
      body.at("choices").empty()) {
    throw Error(ErrorCode::BackendError, "chat completion reply has no choices");
  }
  const json& message = body.at("choices").at(0).value("message", json::object());
  const json content = message.value("content", json());
  std::string text;
  if (content.is_string()) {
    text = content.get<std::string>();
  } else if (content.is_array()) {
    for (const json& part : content) {
      if (part.is_object() && part.value("type", "") == "text") text += part.value("text", "");
    }
  } else {
    throw Error(ErrorCode::BackendError, "chat completion reply has no message content");
  }
  if (usage && body.contains("usage") && body.at("usage").is_object()) {
    usage->prompt_tokens = body.at("usage").value("prompt_tokens", 0);
    usage->completion_tokens = body.at("usage").value("completion_tokens", 0);
  }
  return text;
}

OpenAIBackend::OpenAIBackend(BackendProfile profile, ImageLoader images)
    : profile_(std::move(profile)),
      images_(std::move(images)),
      slots_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(profile_.concurrency, 1, 1024))),
      bucket_(profile_.rate_limit) {
  if (profile_.base_url.empty()) {
    throw Error(ErrorCode::ConfigError, "backend \"" + profile_.name + "\" has no base_url");
  }
  std::tie(origin_, prefix_) = split_base_url(profile_.base_url);
}

OpenAIBackend::~OpenAIBackend() = default;

json OpenAIBackend::post(const std::string& endpoint, const json& body, int* attempts) {
  SlotGuard slot(slots_);
  httplib::Client client(origin_);
  client.set_connection_timeout(profile_.timeout);
  client.set_read_timeout(profile_.timeout);
  client.set_write_timeout(profile_.timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(profile_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const std::string path = prefix_ + endpoint;
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= profile_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(profile_.backoff * (1 << std::min(attempt - 1, 16)));
    }
    bucket_.acquire();
    if (attempts) *attempts = attempt + 1;
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      spdlog::warn("[{}] {} (attempt {})", profile_.name, last_error, attempt + 1);
      continue;
    }
    const int status = res->status;
    if (status >= 200 && status < 300) {
      json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) throw Error(ErrorCode::BackendError, "backend returned invalid JSON");
      return parsed;
    }
    if (status == 401 || status == 403) {
      throw Error(ErrorCode::AuthFailure, "backend \"" + profile_.name + "\" rejected credentials (HTTP " +
                                              std::to_string(status) + ")");
    }
    if (status >= 400 && status < 500) {
      if (looks_like_context_overflow(status, res->body)) {
        throw Error(ErrorCode::ContextOverflow, "backend reported context overflow: " + res->body.substr(0, 300));
      }
      throw Error(ErrorCode::BackendError, "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 300));
    }
    last_error = "HTTP " + std::to_string(status);
    spdlog::warn("[{}] {} (attempt {})", profile_.name, last_error, attempt + 1);
  }
  throw Error(ErrorCode::Transport, "backend \"" + profile_.name + "\" failed after " +
                                        std::to_string(profile_.max_retries + 1) + " attempts: " + last_error);
}

ChatResponse OpenAIBackend::chat(const ChatRequest& request) {
  ChatResponse out;
  const json reply = post("/chat/completions", build_chat_body(request, profile_.model, images_), &out.attempts);
  out.text = parse_chat_completion(reply, &out.usage);
  return out;
}

std::vector<double> OpenAIBackend::embed(std::string_view text) {
  const std::string& model = profile_.embedding_model.empty() ? profile_.model : profile_.embedding_model;
  const json reply = post("/embeddings", json{{"model", model}, {"input", std::string(text)}}, nullptr);
  if (!reply.contains("data") || !reply.at("data").is_array() || reply.at("data").empty() ||
      !reply.at("data").at(0).contains("embedding")) {
    throw Error(ErrorCode::BackendError, "embedding reply has no data[0].embedding");
  }
  return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
}

}  // namespace mmrag
