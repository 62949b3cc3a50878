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

#include "mmrag/scripted.hpp"

#include <fstream>

#include "mmrag/corpus.hpp"
#include "mmrag/error.hpp"

using nlohmann::json;

namespace mmrag {

json to_json(const TranscriptEntry& entry) {
  json match{{"agent", entry.agent}, {"step", entry.step}};
  if (entry.uid) match["uid"] = *entry.uid;
  if (entry.retrieval) match["retrieval"] = *entry.retrieval;
  if (entry.flow) match["flow"] = *entry.flow;
  return json{{"match", match}, {"response", entry.response}};
}

TranscriptEntry transcript_entry_from_json(const json& line) {
  if (!line.is_object() || !line.contains("match") || !line.contains("response") ||
      !line.at("response").is_string()) {
    throw Error(ErrorCode::SchemaError, "transcript entry needs \"match\" and string \"response\"");
  }
  const json& match = line.at("match");
  if (!match.contains("agent") || !match.at("agent").is_string() || !match.contains("step") ||
      !match.at("step").is_number_integer()) {
    throw Error(ErrorCode::SchemaError, "transcript match needs string \"agent\" and integer \"step\"");
  }
  TranscriptEntry entry;
  entry.agent = match.at("agent").get<std::string>();
  entry.step = match.at("step").get<int>();
  if (match.contains("uid")) entry.uid = match.at("uid").get<std::string>();
  if (match.contains("retrieval")) entry.retrieval = match.at("retrieval").get<std::string>();
  if (match.contains("flow")) entry.flow = match.at("flow").get<std::string>();
  entry.response = line.at("response").get<std::string>();
  return entry;
}

ScriptedTranscript ScriptedTranscript::load(const std::filesystem::path& path) {
  std::vector<TranscriptEntry> entries;
  for (const json& line : read_jsonl_file(path)) entries.push_back(transcript_entry_from_json(line));
  return ScriptedTranscript(std::move(entries));
}

void ScriptedTranscript::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  for (const TranscriptEntry& e : entries_) out << to_json(e).dump() << '\n';
}

ScriptedTranscript ScriptedTranscript::session(std::string_view uid, std::string_view retrieval,
                                               std::string_view flow) const {
  std::vector<TranscriptEntry> picked;
  for (const TranscriptEntry& e : entries_) {
    if (e.uid && *e.uid != uid) continue;
    if (e.retrieval && *e.retrieval != retrieval) continue;
    if (e.flow && *e.flow != flow) continue;
    picked.push_back(e);
  }
  return ScriptedTranscript(std::move(picked));
}

std::string scripted_next(ScriptedCursor& cursor, const ChatRequest& request) {
  const auto& entries = cursor.transcript_.entries();
  if (cursor.position_ >= entries.size()) {
    throw Error(ErrorCode::TranscriptExhausted, "no scripted reply left for (" + request.agent + ", " +
                                                    std::to_string(request.step) + ")");
  }
  const TranscriptEntry& next = entries[cursor.position_];
  if (next.agent != request.agent || next.step != request.step) {
    throw Error(ErrorCode::MatcherMismatch, "transcript expects (" + next.agent + ", " + std::to_string(next.step) +
                                                ") but got (" + request.agent + ", " + std::to_string(request.step) +
                                                ")");
  }
  ++cursor.position_;
  return next.response;
}

ChatResponse ScriptedBackend::chat(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  ++calls_;
  return ChatResponse{scripted_next(cursor_, request), {}, 1};
}

std::size_t ScriptedBackend::consumed() const {
  std::lock_guard lock(mu_);
  return cursor_.position();
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

}  // namespace mmrag
