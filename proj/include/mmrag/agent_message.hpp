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

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace mmrag {

// Replies of the three agents. Field names match the JSON keys the agent
// prompts ask for.
struct SeekerChoice {
  std::string reason;
  std::string summary;
  std::vector<int> choice;
  bool operator==(const SeekerChoice&) const = default;
};

struct InspectorAnswer {
  std::string reason;
  std::string answer;
  std::vector<int> reference;
  bool operator==(const InspectorAnswer&) const = default;
};

struct InspectorFeedback {
  std::string reason;
  std::string information;
  std::vector<int> choice;
  bool operator==(const InspectorFeedback&) const = default;
};

struct FinalAnswer {
  std::string reason;
  std::string answer;
  std::vector<int> reference;
  bool operator==(const FinalAnswer&) const = default;
};

using AgentMessage = std::variant<SeekerChoice, InspectorAnswer, InspectorFeedback, FinalAnswer>;

enum class MessageKind { SeekerChoice, InspectorAnswer, InspectorFeedback, FinalAnswer };

std::string_view to_string(MessageKind kind);
MessageKind kind_of(const AgentMessage& message);

nlohmann::json to_json(const AgentMessage& message);

// First balanced {...} span of `raw` that parses as a JSON object. Braces
// inside string literals are ignored.
std::optional<nlohmann::json> extract_json_object(std::string_view raw);

// Throws ParseFailure (no object), SchemaViolation (matches no expected
// variant) or AmbiguousVariant (both "answer" and "information" while both
// inspector variants are expected). Duplicate indices are collapsed.
AgentMessage parse_agent_json(std::string_view raw, std::initializer_list<MessageKind> expected);

}  // namespace mmrag
