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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "mmrag/corpus.hpp"
#include "mmrag/gateway.hpp"

namespace mmrag {

struct BackendProfile {
  std::string name;
  std::string base_url;  // scheme://host[:port][/prefix]; prefix defaults to /v1
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model;
  std::string embedding_model;
  std::size_t concurrency = 4;
  double rate_limit = 0.0;  // requests per second, 0 = unlimited
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{120};
  std::filesystem::path scripted;  // set: replies come from this transcript
  bool few_shot = true;

  bool is_scripted() const { return !scripted.empty(); }
};

struct ResolutionBudget {
  int thumbnail = 512;
  int full = 2048;

  int long_side(ImageResolution r) const { return r == ImageResolution::Thumbnail ? thumbnail : full; }
};

// Produces a data URL for an image part.
using ImageLoader = std::function<std::string(const ImageRef&)>;

// Downscales so the long side is at most `long_side` px (never upscales) and
// re-encodes as JPEG. Throws MissingFile when the image cannot be read.
std::string encode_image_data_url(const std::filesystem::path& path, int long_side);

ImageLoader make_corpus_image_loader(CorpusHandle corpus, ResolutionBudget budget);

// Request body for POST {prefix}/chat/completions.
nlohmann::json build_chat_body(const ChatRequest& request, const std::string& model, const ImageLoader& images);

// Text of choices[0].message; throws BackendError on an unexpected shape.
std::string parse_chat_completion(const nlohmann::json& body, Usage* usage);

class TokenBucket {
 public:
  // rate <= 0 disables limiting.
  explicit TokenBucket(double rate_per_second, double burst = 1.0);
  void acquire();

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

// OpenAI-compatible chat completions / embeddings client. Transport failures
// and 5xx replies are retried with exponential backoff; 4xx never is.
class OpenAIBackend final : public ChatBackend, public EmbeddingBackend {
 public:
  OpenAIBackend(BackendProfile profile, ImageLoader images);
  ~OpenAIBackend() override;

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<double> embed(std::string_view text) override;

  const BackendProfile& profile() const { return profile_; }

 private:
  nlohmann::json post(const std::string& endpoint, const nlohmann::json& body, int* attempts);

  BackendProfile profile_;
  ImageLoader images_;
  std::string origin_;
  std::string prefix_;
  std::counting_semaphore<1024> slots_;
  TokenBucket bucket_;
};

}  // namespace mmrag
