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

#include "mmrag/workflow.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "mmrag/error.hpp"
#include "mmrag/prompts.hpp"

using nlohmann::json;

namespace mmrag {

namespace {

bool is_parse_error(ErrorCode code) {
  return code == ErrorCode::ParseFailure || code == ErrorCode::SchemaViolation || code == ErrorCode::AmbiguousVariant;
}

// Sends `req`, re-prompting with a corrective turn on malformed replies.
AgentMessage call_agent(WorkflowState& state, ChatBackend& gateway, ChatRequest req,
                        std::initializer_list<MessageKind> expected, const WorkflowLimits& limits) {
  for (int attempt = 0;; ++attempt) {
    json event{{"event", req.agent + "_call"},
               {"agent", req.agent},
               {"step", req.step},
               {"attempt", attempt},
               {"prompt_hash", prompt_hash(req)},
               {"images", req.image_pages()}};
    ChatResponse resp;
    try {
      resp = gateway.chat(req);
    } catch (const Error& e) {
      event["error"] = e.what();
      state.trace.append(std::move(event));
      throw;
    }
    ++state.model_calls;
    event["raw"] = resp.text;
    try {
      AgentMessage msg = parse_agent_json(resp.text, expected);
      event["kind"] = to_string(kind_of(msg));
      event["parsed"] = to_json(msg);
      state.trace.append(std::move(event));
      return msg;
    } catch (const Error& e) {
      if (!is_parse_error(e.code())) throw;
      event["error"] = e.what();
      state.trace.append(std::move(event));
      if (attempt >= limits.parse_retries) {
        throw Error(e.code(), req.agent + " reply unusable after " + std::to_string(attempt + 1) + " attempts");
      }
      spdlog::warn("[{}] {} reply unusable, re-prompting: {}", state.query_id, req.agent, e.what());
      req.turns.push_back({"assistant", {resp.text}});
      req.turns.push_back({"user", {prompts::corrective(e.what())}});
    }
  }
}

std::vector<std::string> map_indices(const std::vector<int>& indices, const std::vector<std::string>& shown,
                                     std::vector<int>& dropped) {
  std::vector<std::string> out;
  for (int i : indices) {
    if (i >= 0 && static_cast<std::size_t>(i) < shown.size()) {
      if (std::find(out.begin(), out.end(), shown[i]) == out.end()) out.push_back(shown[i]);
    } else {
      dropped.push_back(i);
    }
  }
  return out;
}

void warn_dropped(const WorkflowState& state, const char* agent, const std::vector<int>& dropped, std::size_t shown) {
  if (dropped.empty()) return;
  spdlog::warn("[{}] {} referenced {} out-of-range image index(es) with {} shown; dropped", state.query_id, agent,
               dropped.size(), shown);
}

std::vector<std::string> ordered_union(const WorkflowState& state, const std::vector<std::string>& a,
                                       const std::vector<std::string>& b) {
  std::vector<std::string> out(a);
  for (const std::string& p : b) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(), [&](const std::string& x, const std::string& y) {
    return state.order.at(x) < state.order.at(y);
  });
  return out;
}

std::vector<ContentPart> image_parts(const std::vector<std::string>& pages, ImageResolution resolution) {
  std::vector<ContentPart> parts;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    parts.emplace_back("Image " + std::to_string(i) + ":");
    parts.emplace_back(ImageRef{pages[i], resolution});
  }
  return parts;
}

void state_update(WorkflowState& state, const std::vector<int>& dropped) {
  json event{{"event", "state_update"},
             {"step", state.step},
             {"status", to_string(state.status)},
             {"candidates", state.candidates},
             {"selected", state.selected_last},
             {"retained", state.retained},
             {"memory_chars", state.memory.size()},
             {"feedback", state.feedback ? json(*state.feedback) : json(nullptr)},
             {"draft", state.draft ? json{{"answer", state.draft->answer}, {"reference", state.draft->reference}}
                                   : json(nullptr)}};
  if (!dropped.empty()) event["dropped_indices"] = dropped;
  state.trace.append(std::move(event));
}

void note_inspected(WorkflowState& state, const std::vector<std::string>& pages) {
  for (const std::string& p : pages) {
    if (std::find(state.pages_inspected.begin(), state.pages_inspected.end(), p) == state.pages_inspected.end()) {
      state.pages_inspected.push_back(p);
    }
  }
}

WorkflowResult finish(WorkflowState& state, std::string answer, std::vector<std::string> reference,
                      Termination termination, bool best_effort, std::string error = {}) {
  WorkflowResult result;
  result.query_id = state.query_id;
  result.answer = std::move(answer);
  result.reference = std::move(reference);
  result.rounds = state.seeker_steps;
  result.termination = termination;
  result.best_effort = best_effort;
  result.pages_sent = state.pages_inspected.size();
  result.model_calls = state.model_calls;
  result.error = std::move(error);
  state.status = termination == Termination::Aborted ? WorkflowStatus::Aborted : WorkflowStatus::Done;
  state.termination = termination;
  json event{{"event", "termination"},
             {"termination", to_string(termination)},
             {"rounds", result.rounds},
             {"answer", result.answer},
             {"reference", result.reference},
             {"best_effort", best_effort},
             {"pages_sent", result.pages_sent},
             {"model_calls", result.model_calls}};
  if (!result.error.empty()) event["error"] = result.error;
  state.trace.append(std::move(event));
  result.trace = state.trace;
  return result;
}

// One Answer-agent call over `pages`; returns the final answer and its pages.
std::pair<std::string, std::vector<std::string>> answer_call(WorkflowState& state, ChatBackend& gateway,
                                                             const std::vector<std::string>& pages,
                                                             const std::string& draft_answer,
                                                             const WorkflowLimits& limits) {
  ChatRequest req;
  req.agent = "answer";
  req.step = state.step;
  req.system_prompt = prompts::answer_system();
  req.decoding = limits.decoding;
  ChatTurn turn{"user", {"Query: " + state.query, "Draft Answer: " + draft_answer, "Images:"}};
  for (auto& part : image_parts(pages, ImageResolution::Full)) turn.parts.push_back(std::move(part));
  req.turns.push_back(std::move(turn));

  const auto final_answer = std::get<FinalAnswer>(call_agent(state, gateway, req, {MessageKind::FinalAnswer}, limits));
  std::vector<int> dropped;
  std::vector<std::string> reference = map_indices(final_answer.reference, pages, dropped);
  warn_dropped(state, "answer", dropped, pages.size());
  if (reference.empty()) reference = pages;
  return {final_answer.answer, ordered_union(state, reference, {})};
}

}  // namespace

std::string_view to_string(WorkflowStatus status) {
  switch (status) {
    case WorkflowStatus::Seeking: return "seeking";
    case WorkflowStatus::Inspecting: return "inspecting";
    case WorkflowStatus::Answering: return "answering";
    case WorkflowStatus::Done: return "done";
    case WorkflowStatus::Aborted: return "aborted";
  }
  return "aborted";
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::InspectorSufficient: return "inspector_sufficient";
    case Termination::SeekerExhausted: return "seeker_exhausted";
    case Termination::RoundCap: return "round_cap";
    case Termination::Aborted: return "aborted";
  }
  return "aborted";
}

void Trace::append(json event) {
  event["seq"] = events_.size();
  events_.push_back(std::move(event));
}

std::string Trace::to_jsonl() const {
  std::string out;
  for (const json& e : events_) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

void Trace::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << to_jsonl();
}

std::string trace_schema_violation(const Trace& trace) {
  static const std::set<std::string> kCalls{"seeker_call", "inspector_call", "answer_call", "generator_call",
                                            "judge_call"};
  static const std::set<std::string> kStatuses{"seeking", "inspecting", "answering", "done", "aborted"};
  static const std::set<std::string> kTerminations{"inspector_sufficient", "seeker_exhausted", "round_cap", "aborted"};
  auto has = [](const json& e, const char* key, json::value_t type) {
    if (!e.contains(key)) return false;
    const json& v = e.at(key);
    if (type == json::value_t::number_integer) return v.is_number_integer();
    return v.type() == type;
  };
  auto is_id_list = [](const json& v) {
    return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_string(); });
  };

  const auto& events = trace.events();
  if (events.empty()) return "trace is empty";
  bool terminated = false;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const json& e = events[i];
    const std::string at = " (event " + std::to_string(i) + ")";
    if (!e.is_object()) return "event is not an object" + at;
    if (!has(e, "seq", json::value_t::number_integer) || e.at("seq").get<std::size_t>() != i) {
      return "seq out of order" + at;
    }
    if (!has(e, "event", json::value_t::string)) return "missing event type" + at;
    const std::string type = e.at("event").get<std::string>();
    if (terminated && type != "judge_call") return "event after termination" + at;
    if (kCalls.contains(type)) {
      if (!has(e, "agent", json::value_t::string) || type != e.at("agent").get<std::string>() + "_call") {
        return "call event without matching agent" + at;
      }
      if (!has(e, "step", json::value_t::number_integer) || !has(e, "attempt", json::value_t::number_integer)) {
        return "call event without step/attempt" + at;
      }
      if (!has(e, "prompt_hash", json::value_t::string)) return "call event without prompt_hash" + at;
      const bool raw = has(e, "raw", json::value_t::string);
      const bool error = has(e, "error", json::value_t::string);
      const bool parsed = e.contains("parsed") && has(e, "kind", json::value_t::string);
      if (!error && !(raw && (parsed || e.contains("score")))) return "call event without outcome" + at;
      if (e.contains("images") && !is_id_list(e.at("images"))) return "images must be page ids" + at;
    } else if (type == "state_update") {
      if (!has(e, "step", json::value_t::number_integer)) return "state_update without step" + at;
      if (!has(e, "status", json::value_t::string) || !kStatuses.contains(e.at("status").get<std::string>())) {
        return "state_update with unknown status" + at;
      }
      for (const char* key : {"candidates", "selected", "retained"}) {
        if (!e.contains(key) || !is_id_list(e.at(key))) return std::string("state_update needs ") + key + at;
      }
    } else if (type == "termination") {
      if (!has(e, "termination", json::value_t::string) ||
          !kTerminations.contains(e.at("termination").get<std::string>())) {
        return "unknown termination" + at;
      }
      if (!has(e, "answer", json::value_t::string) || !e.contains("reference") || !is_id_list(e.at("reference"))) {
        return "termination without answer/reference" + at;
      }
      if (!has(e, "rounds", json::value_t::number_integer)) return "termination without rounds" + at;
      terminated = true;
    } else {
      return "unknown event type \"" + type + "\"" + at;
    }
  }
  if (!terminated) return "no termination event";
  return {};
}

ScriptedTranscript transcript_from_trace(const Trace& trace) {
  std::vector<TranscriptEntry> entries;
  for (const json& e : trace.events()) {
    if (!e.contains("raw") || !e.contains("agent")) continue;
    entries.push_back({e.at("agent").get<std::string>(), e.at("step").get<int>(), std::nullopt, std::nullopt, std::nullopt,
                       e.at("raw").get<std::string>()});
  }
  return ScriptedTranscript(std::move(entries));
}

void AgentMemory::add(const std::string& summary) {
  if (summary.empty()) return;
  summaries_.push_back(summary);
  while (summaries_.size() > 1 && size() > cap_) summaries_.pop_front();
  if (size() > cap_) {
    // A lone oversized summary keeps its most recent characters.
    std::string& only = summaries_.front();
    std::size_t cut = only.size() - cap_;
    while (cut < only.size() && (static_cast<unsigned char>(only[cut]) & 0xC0) == 0x80) ++cut;
    only.erase(0, cut);
  }
}

std::string AgentMemory::text() const {
  std::string out;
  for (const std::string& s : summaries_) {
    if (!out.empty()) out += '\n';
    out += s;
  }
  return out;
}

std::size_t AgentMemory::size() const {
  std::size_t n = 0;
  for (const std::string& s : summaries_) n += s.size();
  return summaries_.empty() ? 0 : n + summaries_.size() - 1;
}

WorkflowState WorkflowState::start(std::string query_id, std::string query, const std::vector<std::string>& pages,
                                   const WorkflowLimits& limits) {
  WorkflowState state;
  state.query_id = std::move(query_id);
  state.query = std::move(query);
  state.memory = AgentMemory(limits.memory_cap);
  for (const std::string& p : pages) {
    if (state.order.emplace(p, state.candidates.size()).second) state.candidates.push_back(p);
  }
  return state;
}

json to_json(const WorkflowResult& result) {
  json out{{"query_id", result.query_id},
           {"answer", result.answer},
           {"reference", result.reference},
           {"rounds", result.rounds},
           {"termination", to_string(result.termination)},
           {"best_effort", result.best_effort},
           {"pages_sent", result.pages_sent},
           {"model_calls", result.model_calls}};
  if (!result.error.empty()) out["error"] = result.error;
  return out;
}

void run_seeker_step(WorkflowState& state, ChatBackend& gateway, const WorkflowLimits& limits) {
  if (state.status != WorkflowStatus::Seeking) {
    throw Error(ErrorCode::InvalidArgument, "seeker step requires status seeking");
  }
  if (state.candidates.empty()) throw Error(ErrorCode::InvalidArgument, "seeker step with no candidates");

  ChatRequest req;
  req.agent = "seeker";
  req.step = state.step;
  req.system_prompt = prompts::seeker_system(limits.few_shot);
  req.decoding = limits.decoding;
  ChatTurn turn{"user", {"Query: " + state.query, "Images:"}};
  for (auto& part : image_parts(state.candidates, ImageResolution::Thumbnail)) turn.parts.push_back(std::move(part));
  const std::string memory = state.memory.text();
  turn.parts.emplace_back("Memory: " + (memory.empty() ? std::string("None") : memory));
  turn.parts.emplace_back("Reflection: " + state.feedback.value_or("None"));
  req.turns.push_back(std::move(turn));

  const auto choice = std::get<SeekerChoice>(call_agent(state, gateway, req, {MessageKind::SeekerChoice}, limits));
  ++state.seeker_steps;

  std::vector<int> dropped;
  state.selected_last = map_indices(choice.choice, state.candidates, dropped);
  warn_dropped(state, "seeker", dropped, state.candidates.size());
  std::erase_if(state.candidates, [&](const std::string& p) {
    return std::find(state.selected_last.begin(), state.selected_last.end(), p) != state.selected_last.end();
  });
  for (const std::string& p : state.selected_last) state.ever_selected.push_back(p);
  state.memory.add(choice.summary);
  state.last_summary = choice.summary;

  if (state.selected_last.empty()) {
    state.termination = Termination::SeekerExhausted;
    state.status = WorkflowStatus::Done;
  } else {
    state.status = WorkflowStatus::Inspecting;
  }
  state_update(state, dropped);
}

void run_inspector_step(WorkflowState& state, ChatBackend& gateway, const WorkflowLimits& limits) {
  if (state.status != WorkflowStatus::Inspecting) {
    throw Error(ErrorCode::InvalidArgument, "inspector step requires status inspecting");
  }
  const std::vector<std::string> inspection = ordered_union(state, state.selected_last, state.retained);
  if (inspection.empty()) throw Error(ErrorCode::InvalidArgument, "inspector step with nothing to inspect");

  ChatRequest req;
  req.agent = "inspector";
  req.step = state.step;
  req.system_prompt = prompts::inspector_system(limits.few_shot);
  req.decoding = limits.decoding;
  ChatTurn turn{"user", {"Query: " + state.query,
                         "Plan: " + (state.last_summary.empty() ? std::string("None") : state.last_summary), "Images:"}};
  for (auto& part : image_parts(inspection, ImageResolution::Full)) turn.parts.push_back(std::move(part));
  req.turns.push_back(std::move(turn));

  const AgentMessage msg = call_agent(state, gateway, req,
                                      {MessageKind::InspectorAnswer, MessageKind::InspectorFeedback}, limits);
  state.inspected_last = inspection;
  note_inspected(state, inspection);

  std::vector<int> dropped;
  if (const auto* answer = std::get_if<InspectorAnswer>(&msg)) {
    std::vector<std::string> reference = map_indices(answer->reference, inspection, dropped);
    warn_dropped(state, "inspector", dropped, inspection.size());
    state.draft = Draft{answer->answer, ordered_union(state, reference, {})};
    state.status = WorkflowStatus::Answering;
  } else {
    const auto& feedback = std::get<InspectorFeedback>(msg);
    state.retained = ordered_union(state, map_indices(feedback.choice, inspection, dropped), {});
    warn_dropped(state, "inspector", dropped, inspection.size());
    state.feedback = feedback.information;
    state.selected_last.clear();
    state.status = WorkflowStatus::Seeking;
    ++state.step;
  }
  state_update(state, dropped);
}

WorkflowResult run_answer_agent(WorkflowState& state, ChatBackend& gateway, const WorkflowLimits& limits) {
  if (state.status != WorkflowStatus::Answering || !state.draft) {
    throw Error(ErrorCode::InvalidArgument, "answer agent requires a draft");
  }
  const Draft& draft = *state.draft;
  const std::set<std::string> referenced(draft.reference.begin(), draft.reference.end());
  const std::set<std::string> inspected(state.inspected_last.begin(), state.inspected_last.end());
  if (referenced == inspected) {
    return finish(state, draft.answer, draft.reference, Termination::InspectorSufficient, false);
  }
  const std::vector<std::string>& pages = draft.reference.empty() ? state.inspected_last : draft.reference;
  auto [answer, reference] = answer_call(state, gateway, pages, draft.answer, limits);
  return finish(state, std::move(answer), std::move(reference), Termination::InspectorSufficient, false);
}

WorkflowResult run_workflow(std::string_view query_id, std::string_view query_text,
                            const std::vector<std::string>& pages, ChatBackend& gateway,
                            const WorkflowLimits& limits) {
  if (pages.empty()) throw Error(ErrorCode::EmptyRetrieval, "no retrieved pages for \"" + std::string(query_id) + "\"");
  WorkflowState state = WorkflowState::start(std::string(query_id), std::string(query_text), pages, limits);
  const std::vector<std::string> initial = state.candidates;

  try {
    for (;;) {
      if (state.status == WorkflowStatus::Answering) return run_answer_agent(state, gateway, limits);
      if (state.status == WorkflowStatus::Inspecting) {
        run_inspector_step(state, gateway, limits);
        continue;
      }
      if (state.status == WorkflowStatus::Done) break;
      if (state.step >= limits.max_rounds) {
        state.termination = Termination::RoundCap;
        break;
      }
      if (state.candidates.empty()) {
        state.termination = Termination::SeekerExhausted;
        break;
      }
      run_seeker_step(state, gateway, limits);
    }

    // No draft: answer from what the Inspector kept or last saw, else from
    // everything retrieved.
    std::vector<std::string> pages_for_answer = ordered_union(state, state.retained, state.inspected_last);
    if (pages_for_answer.empty()) pages_for_answer = initial;
    auto [answer, reference] = answer_call(state, gateway, pages_for_answer, "None", limits);
    return finish(state, std::move(answer), std::move(reference), *state.termination, true);
  } catch (const Error& e) {
    spdlog::error("[{}] workflow aborted: {}", state.query_id, e.what());
    return finish(state, "", {}, Termination::Aborted, false, e.what());
  }
}

WorkflowResult run_workflow(const QueryRecord& query, const RetrievalResult& retrieval, ChatBackend& gateway,
                            const WorkflowLimits& limits) {
  return run_workflow(query.uid, query.query, retrieval.merged, gateway, limits);
}

WorkflowResult run_naive_generation(std::string_view query_id, std::string_view query_text,
                                    const std::vector<std::string>& pages, ChatBackend& gateway,
                                    const WorkflowLimits& limits) {
  if (pages.empty()) throw Error(ErrorCode::EmptyRetrieval, "no retrieved pages for \"" + std::string(query_id) + "\"");
  WorkflowState state = WorkflowState::start(std::string(query_id), std::string(query_text), pages, limits);
  note_inspected(state, state.candidates);
  ChatRequest req;
  req.agent = "generator";
  req.step = 0;
  req.system_prompt = prompts::naive_system();
  req.decoding = limits.decoding;
  ChatTurn turn{"user", {"Query: " + state.query, "Images:"}};
  for (auto& part : image_parts(state.candidates, ImageResolution::Full)) turn.parts.push_back(std::move(part));
  req.turns.push_back(std::move(turn));
  try {
    const auto reply = std::get<FinalAnswer>(call_agent(state, gateway, req, {MessageKind::FinalAnswer}, limits));
    std::vector<int> dropped;
    std::vector<std::string> reference = map_indices(reply.reference, state.candidates, dropped);
    warn_dropped(state, "generator", dropped, state.candidates.size());
    state.seeker_steps = 1;
    return finish(state, reply.answer, ordered_union(state, reference, {}), Termination::InspectorSufficient, false);
  } catch (const Error& e) {
    return finish(state, "", {}, Termination::Aborted, false, e.what());
  }
}

}  // namespace mmrag
