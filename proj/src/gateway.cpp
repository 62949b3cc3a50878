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

#include "mmrag/gateway.hpp"

#include "mmrag/hash.hpp"

using nlohmann::json;

namespace mmrag {

std::string_view to_string(ImageResolution resolution) {
  return resolution == ImageResolution::Thumbnail ? "thumbnail" : "full";
}

std::vector<std::string> ChatRequest::image_pages() const {
  std::vector<std::string> out;
  for (const ChatTurn& turn : turns) {
    for (const ContentPart& part : turn.parts) {
      if (const auto* img = std::get_if<ImageRef>(&part)) out.push_back(img->page_id);
    }
  }
  return out;
}

json canonical_json(const ChatRequest& request) {
  json turns = json::array();
  for (const ChatTurn& turn : request.turns) {
    json parts = json::array();
    for (const ContentPart& part : turn.parts) {
      if (const auto* text = std::get_if<std::string>(&part)) {
        parts.push_back({{"type", "text"}, {"text", *text}});
      } else {
        const auto& img = std::get<ImageRef>(part);
        parts.push_back({{"type", "image"}, {"page_id", img.page_id}, {"resolution", to_string(img.resolution)}});
      }
    }
    turns.push_back({{"role", turn.role}, {"parts", parts}});
  }
  return json{{"system", request.system_prompt},
              {"turns", turns},
              {"temperature", request.decoding.temperature},
              {"max_tokens", request.decoding.max_tokens}};
}

std::string prompt_hash(const ChatRequest& request) {
  return sha256_hex(canonical_json(request).dump());
}

}  // namespace mmrag
