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

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmrag/gateway.hpp"

namespace mmrag {

// One canned reply. `uid`, `retrieval` and `flow` are optional session filters
// so a single file can script many queries, retrieval modes and both flows.
struct TranscriptEntry {
  std::string agent;
  int step = 0;
  std::optional<std::string> uid;
  std::optional<std::string> retrieval;
  std::optional<std::string> flow;
  std::string response;

  bool operator==(const TranscriptEntry&) const = default;
};

nlohmann::json to_json(const TranscriptEntry& entry);
TranscriptEntry transcript_entry_from_json(const nlohmann::json& line);

// JSONL of {"match": {"agent": ..., "step": ...}, "response": ...}.
class ScriptedTranscript {
 public:
  ScriptedTranscript() = default;
  explicit ScriptedTranscript(std::vector<TranscriptEntry> entries) : entries_(std::move(entries)) {}

  static ScriptedTranscript load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  // Entries whose filters admit (uid, retrieval, flow), order preserved.
  ScriptedTranscript session(std::string_view uid, std::string_view retrieval, std::string_view flow) const;

  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<TranscriptEntry> entries_;
};

// Strict sequential cursor over a transcript.
class ScriptedCursor {
 public:
  explicit ScriptedCursor(ScriptedTranscript transcript) : transcript_(std::move(transcript)) {}

  std::size_t position() const { return position_; }
  std::size_t remaining() const { return transcript_.size() - position_; }
  const ScriptedTranscript& transcript() const { return transcript_; }

 private:
  friend std::string scripted_next(ScriptedCursor& cursor, const ChatRequest& request);

  ScriptedTranscript transcript_;
  std::size_t position_ = 0;
};

// Returns the next canned reply and advances. Throws TranscriptExhausted when
// nothing is left, MatcherMismatch when the next entry is for another
// (agent, step).
std::string scripted_next(ScriptedCursor& cursor, const ChatRequest& request);

class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(ScriptedTranscript transcript) : cursor_(std::move(transcript)) {}

  ChatResponse chat(const ChatRequest& request) override;

  std::size_t consumed() const;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  ScriptedCursor cursor_;
  std::size_t calls_ = 0;
};

}  // namespace mmrag
