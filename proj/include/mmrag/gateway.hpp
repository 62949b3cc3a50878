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

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace mmrag {

enum class ImageResolution { Thumbnail, Full };

std::string_view to_string(ImageResolution resolution);

struct ImageRef {
  std::string page_id;
  ImageResolution resolution = ImageResolution::Full;

  bool operator==(const ImageRef&) const = default;
};

using ContentPart = std::variant<std::string, ImageRef>;

struct ChatTurn {
  std::string role;  // "user" or "assistant"
  std::vector<ContentPart> parts;
};

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 1024;
};

// `agent` and `step` identify the call for scripted matching and tracing; they
// are not sent over the wire.
struct ChatRequest {
  std::string agent;
  int step = 0;
  std::string system_prompt;
  std::vector<ChatTurn> turns;
  Decoding decoding;

  // Page ids of every image part, in prompt order.
  std::vector<std::string> image_pages() const;
};

// Image parts appear as {page_id, resolution}, never as pixel data.
nlohmann::json canonical_json(const ChatRequest& request);
std::string prompt_hash(const ChatRequest& request);

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  Usage usage;
  int attempts = 1;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

}  // namespace mmrag
