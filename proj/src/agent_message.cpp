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

#include "mmrag/agent_message.hpp"

#include <algorithm>
#include <set>

#include "mmrag/error.hpp"

using nlohmann::json;

namespace mmrag {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool expects(std::initializer_list<MessageKind> expected, MessageKind kind) {
  return std::find(expected.begin(), expected.end(), kind) != expected.end();
}

std::string text_field(const json& obj, const char* key, bool required) {
  if (!obj.contains(key)) {
    if (required) throw Error(ErrorCode::SchemaViolation, std::string("missing key \"") + key + "\"");
    return {};
  }
  const json& v = obj.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  if (v.is_null()) return {};
  throw Error(ErrorCode::SchemaViolation, std::string("key \"") + key + "\" must be a string");
}

std::vector<int> index_field(const json& obj, const char* key) {
  if (!obj.contains(key)) throw Error(ErrorCode::SchemaViolation, std::string("missing key \"") + key + "\"");
  const json& v = obj.at(key);
  if (!v.is_array()) throw Error(ErrorCode::SchemaViolation, std::string("key \"") + key + "\" must be a list");
  std::vector<int> out;
  std::set<int> seen;
  for (const json& x : v) {
    int value = -1;
    if (x.is_number_integer()) {
      value = x.get<int>();
    } else if (x.is_string()) {
      // Some models quote indices.
      const std::string s = x.get<std::string>();
      if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }) && s.size() < 9) {
        value = std::stoi(s);
      }
    }
    if (value < 0) {
      throw Error(ErrorCode::SchemaViolation, std::string("key \"") + key + "\" must hold non-negative integers");
    }
    if (seen.insert(value).second) out.push_back(value);
  }
  return out;
}

}  // namespace

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::SeekerChoice: return "SeekerChoice";
    case MessageKind::InspectorAnswer: return "InspectorAnswer";
    case MessageKind::InspectorFeedback: return "InspectorFeedback";
    case MessageKind::FinalAnswer: return "FinalAnswer";
  }
  return "SeekerChoice";
}

MessageKind kind_of(const AgentMessage& message) {
  return static_cast<MessageKind>(message.index());
}

json to_json(const AgentMessage& message) {
  return std::visit(
      Overloaded{
          [](const SeekerChoice& m) { return json{{"reason", m.reason}, {"summary", m.summary}, {"choice", m.choice}}; },
          [](const InspectorAnswer& m) {
            return json{{"reason", m.reason}, {"answer", m.answer}, {"reference", m.reference}};
          },
          [](const InspectorFeedback& m) {
            return json{{"reason", m.reason}, {"information", m.information}, {"choice", m.choice}};
          },
          [](const FinalAnswer& m) {
            return json{{"reason", m.reason}, {"answer", m.answer}, {"reference", m.reference}};
          },
      },
      message);
}

std::optional<json> extract_json_object(std::string_view raw) {
  for (std::size_t start = raw.find('{'); start != std::string_view::npos; start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          json parsed = json::parse(raw.substr(start, i - start + 1), nullptr, /*allow_exceptions=*/false);
          if (!parsed.is_discarded() && parsed.is_object()) return parsed;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

AgentMessage parse_agent_json(std::string_view raw, std::initializer_list<MessageKind> expected) {
  const std::optional<json> found = extract_json_object(raw);
  if (!found) throw Error(ErrorCode::ParseFailure, "no JSON object found in model reply");
  const json& obj = *found;

  const bool has_answer = obj.contains("answer");
  const bool has_information = obj.contains("information");
  const bool both_inspector = expects(expected, MessageKind::InspectorAnswer) &&
                              expects(expected, MessageKind::InspectorFeedback);
  if (both_inspector && has_answer && has_information) {
    throw Error(ErrorCode::AmbiguousVariant, "reply carries both \"answer\" and \"information\"");
  }

  if (expects(expected, MessageKind::SeekerChoice) && obj.contains("summary")) {
    return SeekerChoice{text_field(obj, "reason", false), text_field(obj, "summary", true), index_field(obj, "choice")};
  }
  if (expects(expected, MessageKind::InspectorFeedback) && has_information) {
    return InspectorFeedback{text_field(obj, "reason", false), text_field(obj, "information", true),
                             index_field(obj, "choice")};
  }
  if (expects(expected, MessageKind::InspectorAnswer) && has_answer) {
    return InspectorAnswer{text_field(obj, "reason", false), text_field(obj, "answer", true),
                           index_field(obj, "reference")};
  }
  if (expects(expected, MessageKind::FinalAnswer) && has_answer) {
    return FinalAnswer{text_field(obj, "reason", false), text_field(obj, "answer", true), index_field(obj, "reference")};
  }

  std::string names;
  for (MessageKind k : expected) {
    if (!names.empty()) names += ", ";
    names += to_string(k);
  }
  throw Error(ErrorCode::SchemaViolation, "reply " + obj.dump() + " matches none of: " + names);
}

}  // namespace mmrag
