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

#include "mmrag/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include "mmrag/agent_message.hpp"
#include "mmrag/error.hpp"
#include "mmrag/prompts.hpp"

using nlohmann::json;

namespace mmrag {

namespace {

void require_golden(std::span<const std::string> golden) {
  if (golden.empty()) throw Error(ErrorCode::EmptyGolden, "golden page set is empty");
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::string fmt_double(double x) {
  return json(x).dump();
}

std::string cell_name(const GridCell& c) {
  return std::string(to_string(c.retrieval)) + "," + std::string(to_string(c.generation));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << text;
}

}  // namespace

double recall_at_k(std::span<const std::string> retrieved, std::span<const std::string> golden, std::size_t k) {
  require_golden(golden);
  const std::set<std::string> gold(golden.begin(), golden.end());
  std::set<std::string> hit;
  for (std::size_t i = 0; i < std::min(k, retrieved.size()); ++i) {
    if (gold.contains(retrieved[i])) hit.insert(retrieved[i]);
  }
  return static_cast<double>(hit.size()) / static_cast<double>(gold.size());
}

double mrr_at_k(std::span<const std::string> retrieved, std::span<const std::string> golden, std::size_t k) {
  require_golden(golden);
  const std::set<std::string> gold(golden.begin(), golden.end());
  for (std::size_t i = 0; i < std::min(k, retrieved.size()); ++i) {
    if (gold.contains(retrieved[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

std::optional<int> parse_judge_score(std::string_view raw) {
  std::optional<int> score;
  if (const auto obj = extract_json_object(raw); obj && obj->contains("score")) {
    const json& s = obj->at("score");
    if (s.is_number_integer()) score = s.get<int>();
    if (s.is_number_float() && s.get<double>() == static_cast<int>(s.get<double>())) {
      score = static_cast<int>(s.get<double>());
    }
  } else {
    const std::string t = trim(raw);
    if (!t.empty() && t.size() < 4 && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      score = std::stoi(t);
    }
  }
  if (score && (*score < 1 || *score > 5)) return std::nullopt;
  return score;
}

JudgeVerdict judge_accuracy(std::string_view answer, std::string_view reference, std::string_view query,
                            ChatBackend& judge, Trace* trace) {
  ChatRequest req;
  req.agent = "judge";
  req.step = 0;
  req.system_prompt = prompts::judge_system();
  req.turns.push_back({"user",
                       {"Question: " + std::string(query), "Reference answer: " + std::string(reference),
                        "Candidate answer: " + std::string(answer)}});
  JudgeVerdict verdict;
  for (int attempt = 0; attempt < 2; ++attempt) {
    verdict.attempts = attempt + 1;
    json event{{"event", "judge_call"}, {"agent", "judge"}, {"step", 0}, {"attempt", attempt},
               {"prompt_hash", prompt_hash(req)}};
    ChatResponse resp;
    try {
      resp = judge.chat(req);
    } catch (const Error& e) {
      if (trace) {
        event["error"] = e.what();
        trace->append(std::move(event));
      }
      throw Error(ErrorCode::JudgeFailure, std::string("judge backend failed: ") + e.what());
    }
    const std::optional<int> score = parse_judge_score(resp.text);
    if (trace) {
      event["raw"] = resp.text;
      event["score"] = score ? json(*score) : json(nullptr);
      trace->append(std::move(event));
    }
    if (score) {
      verdict.score = *score;
      verdict.correct = *score >= kCorrectThreshold;
      return verdict;
    }
    req.turns.push_back({"assistant", {resp.text}});
    req.turns.push_back({"user", {prompts::corrective("expected an integer score from 1 to 5")}});
  }
  throw Error(ErrorCode::JudgeFailure, "judge gave no usable score after 2 attempts");
}

std::string_view to_string(GenerationMode mode) {
  return mode == GenerationMode::Naive ? "naive" : "multi-agent";
}

GenerationMode parse_generation_mode(std::string_view name) {
  if (name == "naive") return GenerationMode::Naive;
  if (name == "multi-agent" || name == "multi_agent") return GenerationMode::MultiAgent;
  throw Error(ErrorCode::InvalidArgument, "unknown generation mode \"" + std::string(name) + "\" (naive|multi-agent)");
}

GridCell parse_grid_cell(std::string_view text) {
  const std::size_t comma = text.find(',');
  if (comma == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "grid cell must be <retrieval>,<generation>: \"" + std::string(text) + "\"");
  }
  return {parse_retrieval_mode(text.substr(0, comma)), parse_generation_mode(text.substr(comma + 1))};
}

std::vector<GridCell> full_grid() {
  std::vector<GridCell> grid;
  for (GenerationMode g : {GenerationMode::Naive, GenerationMode::MultiAgent}) {
    for (RetrievalMode r : kRetrievalModes) grid.push_back({r, g});
  }
  return grid;
}

std::shared_ptr<ChatBackend> ScriptedSessions::open(std::string_view uid, std::string_view retrieval,
                                                    std::string_view flow) {
  return std::make_shared<ScriptedBackend>(transcript_.session(uid, retrieval, flow));
}

EvalAggregates aggregate(std::span<const QueryEval> rows) {
  EvalAggregates agg;
  for (std::size_t k : kRecallCutoffs) agg.mean_recall_at[k] = 0.0;
  if (rows.empty()) return agg;
  const double n = static_cast<double>(rows.size());
  double pages = 0.0, mrr = 0.0;
  for (const QueryEval& row : rows) {
    for (std::size_t k : kRecallCutoffs) agg.mean_recall_at[k] += row.recall_at.at(k);
    mrr += row.reciprocal_rank;
    pages += static_cast<double>(row.pages_sent);
    agg.mean_times.retrieval_ms += row.times.retrieval_ms;
    agg.mean_times.generation_ms += row.times.generation_ms;
    agg.mean_times.judge_ms += row.times.judge_ms;
    if (row.judge_score) {
      ++agg.judged;
      if (row.correct) ++agg.correct;
    }
  }
  for (auto& [k, v] : agg.mean_recall_at) v /= n;
  agg.mrr_at_5 = mrr / n;
  agg.mean_pages = pages / n;
  agg.mean_times.retrieval_ms /= n;
  agg.mean_times.generation_ms /= n;
  agg.mean_times.judge_ms /= n;
  agg.accuracy = agg.judged ? static_cast<double>(agg.correct) / static_cast<double>(agg.judged) : 0.0;
  return agg;
}

std::vector<EvalReport> run_ablation(std::span<const QueryRecord> dataset, const Corpus& corpus,
                                     std::span<const GridCell> grid, SessionFactory& gateway, SessionFactory& judge,
                                     const AblationOptions& options) {
  std::vector<EvalReport> reports;
  if (grid.empty()) return reports;

  std::vector<const QueryRecord*> queries;
  for (const QueryRecord& q : dataset) queries.push_back(&q);
  std::sort(queries.begin(), queries.end(), [](auto* a, auto* b) { return a->uid < b->uid; });

  const QueryVectorSource vectors = options.query_vectors
                                        ? options.query_vectors
                                        : QueryVectorSource([&corpus](const QueryRecord& q) {
                                            return sidecar_query_vectors(corpus, q.uid);
                                          });

  struct CachedRetrieval {
    RetrievalResult result;
    double ms = 0.0;
  };
  std::map<RetrievalMode, std::vector<CachedRetrieval>> cache;
  for (const GridCell& cell : grid) {
    if (cache.contains(cell.retrieval)) continue;
    auto& rows = cache[cell.retrieval];
    for (const QueryRecord* q : queries) {
      const auto t0 = std::chrono::steady_clock::now();
      RetrievalResult r = retrieve(q->uid, vectors(*q), corpus, options.recall, cell.retrieval);
      rows.push_back({std::move(r), elapsed_ms(t0)});
    }
  }

  if (!options.trace_dir.empty()) std::filesystem::create_directories(options.trace_dir);

  for (const GridCell& cell : grid) {
    EvalReport report;
    report.cell = cell;
    report.per_query.resize(queries.size());
    const auto& retrievals = cache.at(cell.retrieval);

    auto evaluate = [&](std::size_t i) {
      const QueryRecord& q = *queries[i];
      const RetrievalResult& r = retrievals[i].result;
      QueryEval row;
      row.uid = q.uid;
      row.retrieved = r.ranked();
      row.merged = r.merged;
      row.golden = q.reference_page_ids;
      for (std::size_t k : kRecallCutoffs) row.recall_at[k] = recall_at_k(row.retrieved, row.golden, k);
      row.reciprocal_rank = mrr_at_k(row.retrieved, row.golden, kMrrCutoff);
      for (const auto& [m, rec] : r.per_modality) row.k_used[m] = rec.k_used;
      row.times.retrieval_ms = retrievals[i].ms;

      const std::string flow(to_string(cell.generation));
      auto t0 = std::chrono::steady_clock::now();
      auto backend = gateway.open(q.uid, to_string(cell.retrieval), flow);
      WorkflowResult result = cell.generation == GenerationMode::Naive
                                  ? run_naive_generation(q.uid, q.query, r.merged, *backend, options.limits)
                                  : run_workflow(q, r, *backend, options.limits);
      row.times.generation_ms = elapsed_ms(t0);
      row.answer = result.answer;
      row.reference = result.reference;
      row.pages_sent = result.pages_sent;
      row.termination = std::string(to_string(result.termination));
      row.rounds = result.rounds;
      row.error = result.error;

      t0 = std::chrono::steady_clock::now();
      Trace trace = result.trace;
      try {
        auto judge_backend = judge.open(q.uid, to_string(cell.retrieval), flow);
        const JudgeVerdict v = judge_accuracy(result.answer, q.reference_answer, q.query, *judge_backend, &trace);
        row.judge_score = v.score;
        row.correct = v.correct;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::JudgeFailure) throw;
        if (!row.error.empty()) row.error += "; ";
        row.error += e.what();
      }
      row.times.judge_ms = elapsed_ms(t0);

      if (!options.trace_dir.empty()) {
        std::string name = std::string(to_string(cell.retrieval)) + "__" + flow + "__" + q.uid + ".jsonl";
        std::replace(name.begin(), name.end(), '/', '_');
        trace.save(options.trace_dir / name);
      }
      report.per_query[i] = std::move(row);
    };

    const std::size_t workers = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(1, queries.size()));
    if (workers == 1) {
      for (std::size_t i = 0; i < queries.size(); ++i) evaluate(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mu;
      {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
          pool.emplace_back([&] {
            for (std::size_t i = next++; i < queries.size(); i = next++) {
              try {
                evaluate(i);
              } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
              }
            }
          });
        }
      }
      if (failure) std::rethrow_exception(failure);
    }
    report.aggregates = aggregate(report.per_query);
    reports.push_back(std::move(report));
  }
  return reports;
}

json to_json(const EvalReport& report) {
  json rows = json::array();
  for (const QueryEval& row : report.per_query) {
    json recall = json::object();
    for (const auto& [k, v] : row.recall_at) recall[std::to_string(k)] = v;
    json k_used = json::object();
    for (const auto& [m, k] : row.k_used) k_used[std::string(to_string(m))] = k;
    json entry{{"uid", row.uid},
               {"retrieved", row.retrieved},
               {"merged", row.merged},
               {"golden", row.golden},
               {"recall_at", recall},
               {"reciprocal_rank", row.reciprocal_rank},
               {"k_used", k_used},
               {"pages_sent", row.pages_sent},
               {"answer", row.answer},
               {"reference", row.reference},
               {"termination", row.termination},
               {"rounds", row.rounds},
               {"judge_score", row.judge_score ? json(*row.judge_score) : json(nullptr)},
               {"correct", row.correct}};
    if (!row.error.empty()) entry["error"] = row.error;
    rows.push_back(std::move(entry));
  }
  const EvalAggregates& a = report.aggregates;
  json recall = json::object();
  for (const auto& [k, v] : a.mean_recall_at) recall[std::to_string(k)] = v;
  return json{{"retrieval", to_string(report.cell.retrieval)},
              {"generation", to_string(report.cell.generation)},
              {"aggregates",
               {{"mean_recall_at", recall},
                {"mrr_at_5", a.mrr_at_5},
                {"accuracy", a.accuracy},
                {"judged", a.judged},
                {"correct", a.correct},
                {"avg_pages", a.mean_pages},
                {"queries", report.per_query.size()}}},
              {"per_query", rows}};
}

std::string report_csv(std::span<const EvalReport> reports) {
  std::string out =
      "retrieval,generation,uid,k_visual,k_textual,pages_sent,recall_at_1,recall_at_3,recall_at_5,mrr_at_5,"
      "judge_score,correct,termination,rounds,answer,reference\n";
  for (const EvalReport& r : reports) {
    for (const QueryEval& row : r.per_query) {
      auto k = [&](Modality m) {
        auto it = row.k_used.find(m);
        return it == row.k_used.end() ? std::string() : std::to_string(it->second);
      };
      out += std::string(to_string(r.cell.retrieval)) + "," + std::string(to_string(r.cell.generation)) + "," +
             csv_field(row.uid) + "," + k(Modality::Visual) + "," + k(Modality::Textual) + "," +
             std::to_string(row.pages_sent) + "," + fmt_double(row.recall_at.at(1)) + "," +
             fmt_double(row.recall_at.at(3)) + "," + fmt_double(row.recall_at.at(5)) + "," +
             fmt_double(row.reciprocal_rank) + "," + (row.judge_score ? std::to_string(*row.judge_score) : "") +
             "," + (row.correct ? "true" : "false") + "," + row.termination + "," + std::to_string(row.rounds) +
             "," + csv_field(row.answer) + "," + csv_field(join(row.reference, ' ')) + "\n";
    }
  }
  return out;
}

std::string latency_csv(std::span<const EvalReport> reports) {
  std::string out = "retrieval,generation,uid,retrieval_ms,generation_ms,judge_ms\n";
  for (const EvalReport& r : reports) {
    for (const QueryEval& row : r.per_query) {
      out += std::string(to_string(r.cell.retrieval)) + "," + std::string(to_string(r.cell.generation)) + "," +
             csv_field(row.uid) + "," + fmt_double(row.times.retrieval_ms) + "," +
             fmt_double(row.times.generation_ms) + "," + fmt_double(row.times.judge_ms) + "\n";
    }
  }
  return out;
}

json latency_json(std::span<const EvalReport> reports) {
  json cells = json::array();
  for (const EvalReport& r : reports) {
    const PhaseTimes& t = r.aggregates.mean_times;
    cells.push_back({{"cell", cell_name(r.cell)},
                     {"mean_retrieval_ms", t.retrieval_ms},
                     {"mean_generation_ms", t.generation_ms},
                     {"mean_judge_ms", t.judge_ms}});
  }
  return json{{"cells", cells}};
}

void write_reports(std::span<const EvalReport> reports, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json cells = json::array();
  for (const EvalReport& r : reports) cells.push_back(to_json(r));
  write_text(dir / "report.json", json{{"cells", cells}}.dump(2) + "\n");
  write_text(dir / "report.csv", report_csv(reports));
  write_text(dir / "latency.csv", latency_csv(reports));
  write_text(dir / "latency.json", latency_json(reports).dump(2) + "\n");
}

}  // namespace mmrag
