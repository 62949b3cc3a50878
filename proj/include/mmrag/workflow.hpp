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
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmrag/agent_message.hpp"
#include "mmrag/corpus.hpp"
#include "mmrag/gateway.hpp"
#include "mmrag/hybrid.hpp"
#include "mmrag/scripted.hpp"

namespace mmrag {

struct WorkflowLimits {
  int max_rounds = 5;
  std::size_t memory_cap = 2000;  // characters
  int parse_retries = 2;          // corrective re-prompts after a malformed reply
  bool few_shot = true;
  Decoding decoding;
};

enum class WorkflowStatus { Seeking, Inspecting, Answering, Done, Aborted };
enum class Termination { InspectorSufficient, SeekerExhausted, RoundCap, Aborted };

std::string_view to_string(WorkflowStatus status);
std::string_view to_string(Termination termination);

// Append-only event log. Every event carries a sequence number; no wall-clock
// values, so identical runs give identical bytes.
class Trace {
 public:
  void append(nlohmann::json event);
  const std::vector<nlohmann::json>& events() const { return events_; }
  std::string to_jsonl() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<nlohmann::json> events_;
};

// Checks every event against the trace schema: sequence numbers, known event
// types and their required fields, one final termination event. Returns the
// first problem found, empty when the trace is valid.
std::string trace_schema_violation(const Trace& trace);

// Every *_call event turned back into a transcript entry, in call order.
ScriptedTranscript transcript_from_trace(const Trace& trace);

struct Draft {
  std::string answer;
  std::vector<std::string> reference;
};

// Bounded FIFO of Seeker summaries.
class AgentMemory {
 public:
  explicit AgentMemory(std::size_t cap) : cap_(cap) {}
  void add(const std::string& summary);
  std::string text() const;
  std::size_t size() const;  // characters of text()

 private:
  std::size_t cap_;
  std::deque<std::string> summaries_;
};

struct WorkflowState {
  std::string query_id;
  std::string query;
  int step = 0;
  std::vector<std::string> candidates;      // I^c_t, in retrieval order
  std::vector<std::string> selected_last;   // I^s_t
  std::vector<std::string> retained;        // I^r_{t-1}
  std::vector<std::string> inspected_last;  // inputs of the latest inspector call
  std::vector<std::string> ever_selected;
  std::vector<std::string> pages_inspected;  // distinct, first-seen order
  AgentMemory memory{2000};
  std::string last_summary;
  std::optional<std::string> feedback;  // F_{t-1}
  std::optional<Draft> draft;
  WorkflowStatus status = WorkflowStatus::Seeking;
  std::optional<Termination> termination;
  int seeker_steps = 0;
  int model_calls = 0;
  Trace trace;

  // Retrieval position of each page, the order used for inspection sets.
  std::unordered_map<std::string, std::size_t> order;

  static WorkflowState start(std::string query_id, std::string query, const std::vector<std::string>& pages,
                             const WorkflowLimits& limits);
};

struct WorkflowResult {
  std::string query_id;
  std::string answer;
  std::vector<std::string> reference;
  int rounds = 0;
  Termination termination = Termination::Aborted;
  bool best_effort = false;
  std::size_t pages_sent = 0;
  int model_calls = 0;
  std::string error;
  Trace trace;
};

nlohmann::json to_json(const WorkflowResult& result);

// Seeker: thumbnails of the candidates -> selection, memory update, and
// I^c_{t+1} = I^c_t minus the selection. An empty selection ends the loop.
void run_seeker_step(WorkflowState& state, ChatBackend& gateway, const WorkflowLimits& limits);

// Inspector: full-resolution review of selection plus retained pages; stores
// either a draft answer or feedback with pages to retain.
void run_inspector_step(WorkflowState& state, ChatBackend& gateway, const WorkflowLimits& limits);

// Accepts the draft when it references every inspected page; otherwise one
// Answer-agent call over the referenced pages decides the final answer.
WorkflowResult run_answer_agent(WorkflowState& state, ChatBackend& gateway, const WorkflowLimits& limits);

// The full loop over retrieval.merged. Throws EmptyRetrieval; gateway failures
// end the run with termination=aborted.
WorkflowResult run_workflow(const QueryRecord& query, const RetrievalResult& retrieval, ChatBackend& gateway,
                            const WorkflowLimits& limits);
WorkflowResult run_workflow(std::string_view query_id, std::string_view query_text,
                            const std::vector<std::string>& pages, ChatBackend& gateway,
                            const WorkflowLimits& limits);

// Single model call over every retrieved page.
WorkflowResult run_naive_generation(std::string_view query_id, std::string_view query_text,
                                    const std::vector<std::string>& pages, ChatBackend& gateway,
                                    const WorkflowLimits& limits);

}  // namespace mmrag
