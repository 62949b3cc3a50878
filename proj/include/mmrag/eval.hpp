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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmrag/corpus.hpp"
#include "mmrag/gateway.hpp"
#include "mmrag/hybrid.hpp"
#include "mmrag/scripted.hpp"
#include "mmrag/workflow.hpp"

namespace mmrag {

// |golden ∩ first k retrieved| / |golden|. Throws EmptyGolden.
double recall_at_k(std::span<const std::string> retrieved, std::span<const std::string> golden, std::size_t k);

// 1 / rank of the first golden page within the top k, 0 if none. Throws EmptyGolden.
double mrr_at_k(std::span<const std::string> retrieved, std::span<const std::string> golden, std::size_t k);

struct JudgeVerdict {
  int score = 0;
  bool correct = false;  // score >= 4
  int attempts = 0;
};

inline constexpr int kCorrectThreshold = 4;

// Integer 1..5 from a judge reply: {"score": n} or a bare integer.
std::optional<int> parse_judge_score(std::string_view raw);

// One judge call (plus one retry on an unusable reply). Throws JudgeFailure.
JudgeVerdict judge_accuracy(std::string_view answer, std::string_view reference, std::string_view query,
                            ChatBackend& judge, Trace* trace = nullptr);

enum class GenerationMode { Naive, MultiAgent };

std::string_view to_string(GenerationMode mode);
GenerationMode parse_generation_mode(std::string_view name);

struct GridCell {
  RetrievalMode retrieval = RetrievalMode::Naive;
  GenerationMode generation = GenerationMode::Naive;

  bool operator==(const GridCell&) const = default;
};

// "naive,multi-agent" style; throws InvalidArgument.
GridCell parse_grid_cell(std::string_view text);
// All 4 x 2 combinations.
std::vector<GridCell> full_grid();

// Hands out one backend per (query, retrieval mode, flow). Scripted sessions give every run its
// own cursor; live backends share one client.
class SessionFactory {
 public:
  virtual ~SessionFactory() = default;
  virtual std::shared_ptr<ChatBackend> open(std::string_view uid, std::string_view retrieval,
                                            std::string_view flow) = 0;
};

class ScriptedSessions final : public SessionFactory {
 public:
  explicit ScriptedSessions(ScriptedTranscript transcript) : transcript_(std::move(transcript)) {}
  std::shared_ptr<ChatBackend> open(std::string_view uid, std::string_view retrieval, std::string_view flow) override;

 private:
  ScriptedTranscript transcript_;
};

class SharedSession final : public SessionFactory {
 public:
  explicit SharedSession(std::shared_ptr<ChatBackend> backend) : backend_(std::move(backend)) {}
  std::shared_ptr<ChatBackend> open(std::string_view, std::string_view, std::string_view) override { return backend_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
};

struct PhaseTimes {
  double retrieval_ms = 0.0;
  double generation_ms = 0.0;
  double judge_ms = 0.0;
};

struct QueryEval {
  std::string uid;
  std::vector<std::string> retrieved;  // ranked
  std::vector<std::string> merged;     // what generation saw
  std::vector<std::string> golden;
  std::map<std::size_t, double> recall_at;
  double reciprocal_rank = 0.0;  // MRR@5
  std::map<Modality, std::size_t> k_used;
  std::size_t pages_sent = 0;
  std::string answer;
  std::vector<std::string> reference;
  std::string termination;
  int rounds = 0;
  std::optional<int> judge_score;
  bool correct = false;
  std::string error;
  PhaseTimes times;
};

struct EvalAggregates {
  std::map<std::size_t, double> mean_recall_at;
  double mrr_at_5 = 0.0;
  double accuracy = 0.0;
  std::size_t judged = 0;
  std::size_t correct = 0;
  double mean_pages = 0.0;
  PhaseTimes mean_times;
};

struct EvalReport {
  GridCell cell;
  std::vector<QueryEval> per_query;  // ordered by uid
  EvalAggregates aggregates;
};

inline constexpr std::size_t kRecallCutoffs[] = {1, 3, 5};
inline constexpr std::size_t kMrrCutoff = 5;

using QueryVectorSource = std::function<QueryVectors(const QueryRecord&)>;

struct AblationOptions {
  RecallConfig recall;
  WorkflowLimits limits;
  std::size_t concurrency = 1;
  std::filesystem::path trace_dir;  // when set, one trace file per (cell, query)
  QueryVectorSource query_vectors;  // defaults to the corpus sidecar tables
};

EvalAggregates aggregate(std::span<const QueryEval> rows);

// One report per grid cell, in grid order. Retrieval for a mode is computed
// once per query and shared by every cell using that mode.
std::vector<EvalReport> run_ablation(std::span<const QueryRecord> dataset, const Corpus& corpus,
                                     std::span<const GridCell> grid, SessionFactory& gateway, SessionFactory& judge,
                                     const AblationOptions& options);

// Deterministic views (no timing).
nlohmann::json to_json(const EvalReport& report);
std::string report_csv(std::span<const EvalReport> reports);
// Wall-clock views.
std::string latency_csv(std::span<const EvalReport> reports);
nlohmann::json latency_json(std::span<const EvalReport> reports);

// report.json, report.csv, latency.csv, latency.json under `dir`.
void write_reports(std::span<const EvalReport> reports, const std::filesystem::path& dir);

}  // namespace mmrag
