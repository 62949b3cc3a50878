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

#include "mmrag/cli.hpp"

#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mmrag/config.hpp"
#include "mmrag/engine.hpp"
#include "mmrag/error.hpp"
#include "mmrag/service.hpp"

namespace fs = std::filesystem;

namespace mmrag {

namespace {

struct EngineFlags {
  std::string config;
  std::string index;
  std::string scripted;
  std::string scripted_judge;
  std::optional<std::size_t> k_base, k_min, k_max, fit_pool;
  std::optional<double> em_tol;
  std::optional<int> em_max_iter;
  std::optional<int> max_rounds;
  std::string vectors_visual;
  std::string vectors_textual;

  void attach(CLI::App* cmd, bool backends) {
    cmd->add_option("--config", config, "Engine config file")->check(CLI::ExistingFile);
    cmd->add_option("--index", index, "Index directory written by ingest");
    cmd->add_option("--k-base", k_base, "Static top-K; also sets the dynamic bounds to [K/2, K]");
    cmd->add_option("--k-min", k_min, "Lower clamp for dynamic K");
    cmd->add_option("--k-max", k_max, "Upper clamp for dynamic K");
    cmd->add_option("--fit-pool", fit_pool, "Number of top scores the mixture is fitted on");
    cmd->add_option("--em-tol", em_tol, "EM log-likelihood convergence tolerance");
    cmd->add_option("--em-max-iter", em_max_iter, "EM iteration cap");
    cmd->add_option("--vectors-visual", vectors_visual, "JSONL query vectors for the visual modality");
    cmd->add_option("--vectors-textual", vectors_textual, "JSONL query vectors for the textual modality");
    if (backends) {
      cmd->add_option("--scripted", scripted, "Replay generation replies from a transcript");
      cmd->add_option("--scripted-judge", scripted_judge, "Replay judge replies from a transcript");
      cmd->add_option("--max-rounds", max_rounds, "Seeker/Inspector round cap");
    }
  }

  EngineConfig build() const {
    EngineConfig cfg;
    if (!config.empty()) cfg = EngineConfig::parse(read_text(config), fs::path(config).parent_path());
    if (!index.empty()) cfg.index = index;
    if (k_base) {
      const RecallConfig derived = RecallConfig::with_base(*k_base);
      cfg.recall.k_base = derived.k_base;
      cfg.recall.fit_pool = derived.fit_pool;
      cfg.recall.k_min = derived.k_min;
      cfg.recall.k_max = derived.k_max;
    }
    if (fit_pool) cfg.recall.fit_pool = *fit_pool;
    if (k_min) cfg.recall.k_min = *k_min;
    if (k_max) cfg.recall.k_max = *k_max;
    if (em_tol) cfg.recall.em_tol = *em_tol;
    if (em_max_iter) cfg.recall.em_max_iter = *em_max_iter;
    if (max_rounds) cfg.limits.max_rounds = *max_rounds;
    auto scripted_profile = [&](const std::string& name, const std::string& path) {
      BackendProfile p;
      p.name = name;
      p.scripted = path;
      cfg.backends[name] = p;
    };
    if (!scripted.empty()) {
      scripted_profile("cli-scripted", scripted);
      cfg.generation_backend = "cli-scripted";
    }
    if (!scripted_judge.empty()) {
      scripted_profile("cli-scripted-judge", scripted_judge);
      cfg.judge_backend = "cli-scripted-judge";
    }
    if (cfg.index.empty()) throw Error(ErrorCode::ConfigError, "no index given (use --index or a config file)");
    cfg.finalize();
    return cfg;
  }

  QueryVectors supplied(const std::string& uid) const {
    QueryVectors v;
    auto load = [&](const std::string& path, Modality m) -> std::optional<std::vector<double>> {
      if (path.empty()) return std::nullopt;
      const EmbeddingTable table = load_embedding_file(path, m, std::nullopt);
      const std::vector<double>* vec = table.find(uid);
      if (!vec) throw Error(ErrorCode::MissingEmbedding, "no vector for \"" + uid + "\" in " + path);
      return *vec;
    };
    v.visual = load(vectors_visual, Modality::Visual);
    v.textual = load(vectors_textual, Modality::Textual);
    return v;
  }

  static std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

int cmd_ingest(const std::string& manifest, const std::string& index, std::ostream& out) {
  CorpusHandle corpus = ingest_corpus(manifest);
  const PersistOutcome outcome = persist_index(*corpus, index);
  if (outcome.up_to_date) {
    out << "index " << index << " is up to date (" << outcome.fingerprint.substr(0, 12) << ")\n";
    return kExitOk;
  }
  out << "documents: " << corpus->documents().size() << "\n"
      << "pages: " << corpus->pages().size() << "\n"
      << "chunks: " << corpus->chunk_count() << "\n";
  for (Modality m : kModalities) {
    const EmbeddingTable* t = corpus->embeddings(m);
    out << to_string(m) << " vectors: " << (t ? t->size() : 0) << "\n";
  }
  out << "queries: " << corpus->queries().size() << "\n"
      << "wrote " << index << " (" << outcome.fingerprint.substr(0, 12) << ")\n";
  return kExitOk;
}

void print_answer(const WorkflowResult& r, std::ostream& out) {
  out << "answer: " << r.answer << "\n";
  out << "reference:";
  for (const std::string& p : r.reference) out << " " << p;
  out << "\nrounds: " << r.rounds << "\n"
      << "termination: " << to_string(r.termination) << (r.best_effort ? " (best effort)" : "") << "\n"
      << "pages sent: " << r.pages_sent << "\n";
  if (!r.error.empty()) out << "error: " << r.error << "\n";
}

void print_summary(const std::vector<EvalReport>& reports, std::ostream& out) {
  out << std::left << std::setw(16) << "retrieval" << std::setw(13) << "generation" << std::right << std::setw(9)
      << "R@1" << std::setw(9) << "R@3" << std::setw(9) << "R@5" << std::setw(9) << "MRR@5" << std::setw(10)
      << "accuracy" << std::setw(9) << "pages" << "\n";
  out << std::fixed << std::setprecision(3);
  for (const EvalReport& r : reports) {
    const EvalAggregates& a = r.aggregates;
    out << std::left << std::setw(16) << to_string(r.cell.retrieval) << std::setw(13)
        << to_string(r.cell.generation) << std::right << std::setw(9) << a.mean_recall_at.at(1) << std::setw(9)
        << a.mean_recall_at.at(3) << std::setw(9) << a.mean_recall_at.at(5) << std::setw(9) << a.mrr_at_5
        << std::setw(10) << a.accuracy << std::setw(9) << a.mean_pages << "\n";
  }
  out.unsetf(std::ios::floatfield);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mmrag: multimodal retrieval and agentic question answering over page images"};
  app.require_subcommand(1);

  std::string manifest, index_out;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus manifest and write the index");
  ingest->add_option("--manifest", manifest, "Corpus manifest (JSON)")->required();
  ingest->add_option("--index", index_out, "Output index directory")->required();

  EngineFlags retrieve_flags;
  std::string retrieve_uid, retrieve_text, retrieve_mode = "dynamic_hybrid";
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Retrieve pages for one query and print the JSON result");
  retrieve_flags.attach(retrieve_cmd, false);
  retrieve_cmd->add_option("--query-id,--uid", retrieve_uid, "Dataset query uid");
  retrieve_cmd->add_option("--query", retrieve_text, "Ad hoc query text");
  retrieve_cmd->add_option("--mode", retrieve_mode, "naive | dynamic | hybrid | dynamic_hybrid");

  EngineFlags ask_flags;
  std::string ask_uid, ask_text, ask_mode = "dynamic_hybrid", ask_generation = "multi-agent", ask_trace;
  bool ask_json = false;
  auto* ask = app.add_subcommand("ask", "Answer one query");
  ask_flags.attach(ask, true);
  ask->add_option("--uid,--query-id", ask_uid, "Dataset query uid");
  ask->add_option("--query", ask_text, "Ad hoc query text");
  ask->add_option("--mode", ask_mode, "naive | dynamic | hybrid | dynamic_hybrid");
  ask->add_option("--generation", ask_generation, "naive | multi-agent");
  ask->add_option("--trace", ask_trace, "Write the trace as JSONL");
  ask->add_flag("--json", ask_json, "Print the result as JSON");

  EngineFlags eval_flags;
  std::string eval_dataset, eval_out, eval_trace_dir;
  std::vector<std::string> eval_grid{"all"};
  std::optional<std::size_t> eval_concurrency;
  auto* eval = app.add_subcommand("eval", "Run the retrieval x generation grid and write reports");
  eval_flags.attach(eval, true);
  eval->add_option("--dataset", eval_dataset, "Dataset file (defaults to the queries stored in the index)");
  eval->add_option("--grid", eval_grid, "Cells as retrieval,generation or 'all'");
  eval->add_option("--out", eval_out, "Report directory")->required();
  eval->add_option("--trace-dir", eval_trace_dir, "Write one trace per cell and query");
  eval->add_option("--concurrency", eval_concurrency, "Queries evaluated in parallel");

  EngineFlags serve_flags;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_flags.attach(serve_cmd, true);
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*ingest) return cmd_ingest(manifest, index_out, out);

    if (*retrieve_cmd) {
      auto engine = Engine::open(retrieve_flags.build());
      QueryInput input{retrieve_uid, retrieve_text, {}};
      if (!retrieve_uid.empty()) input.vectors = retrieve_flags.supplied(retrieve_uid);
      out << to_json(engine->retrieve(input, parse_retrieval_mode(retrieve_mode))).dump(2) << "\n";
      return kExitOk;
    }

    if (*ask) {
      auto engine = Engine::open(ask_flags.build());
      QueryInput input{ask_uid, ask_text, {}};
      if (!ask_uid.empty()) input.vectors = ask_flags.supplied(ask_uid);
      const WorkflowResult r =
          engine->ask(input, parse_retrieval_mode(ask_mode), parse_generation_mode(ask_generation));
      if (!ask_trace.empty()) r.trace.save(ask_trace);
      if (ask_json) {
        out << to_json(r).dump(2) << "\n";
      } else {
        print_answer(r, out);
      }
      return r.termination == Termination::Aborted ? kExitError : kExitOk;
    }

    if (*eval) {
      EngineConfig cfg = eval_flags.build();
      if (eval_concurrency) cfg.eval_concurrency = *eval_concurrency;
      auto engine = Engine::open(std::move(cfg));
      const std::vector<QueryRecord> dataset =
          eval_dataset.empty() ? engine->corpus().queries() : load_dataset(eval_dataset, engine->corpus());
      if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "no queries to evaluate");
      std::vector<GridCell> grid;
      for (const std::string& cell : eval_grid) {
        if (cell == "all") {
          for (const GridCell& c : full_grid()) grid.push_back(c);
        } else {
          grid.push_back(parse_grid_cell(cell));
        }
      }
      const auto reports = engine->evaluate(dataset, grid, eval_trace_dir);
      write_reports(reports, eval_out);
      print_summary(reports, out);
      out << "reports written to " << eval_out << "\n";
      return kExitOk;
    }

    if (*serve_cmd) {
      serve(Engine::open(serve_flags.build()), host, port);
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace mmrag
