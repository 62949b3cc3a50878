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

#include "mmrag/engine.hpp"

#include "mmrag/error.hpp"
#include "mmrag/hash.hpp"
#include "mmrag/openai_backend.hpp"
#include "mmrag/scripted.hpp"

namespace mmrag {

namespace {

std::shared_ptr<SessionFactory> session_factory(const EngineConfig& config, const std::string& name,
                                                const CorpusHandle& corpus) {
  if (name.empty()) return nullptr;
  const BackendProfile& p = config.backends.at(name);
  if (p.is_scripted()) return std::make_shared<ScriptedSessions>(ScriptedTranscript::load(p.scripted));
  auto live = std::make_shared<OpenAIBackend>(p, make_corpus_image_loader(corpus, config.resolution));
  return std::make_shared<SharedSession>(std::move(live));
}

std::shared_ptr<EmbeddingBackend> embedding_backend(const EngineConfig& config, const std::string& name,
                                                    const CorpusHandle& corpus) {
  if (name.empty()) return nullptr;
  const BackendProfile& p = config.backends.at(name);
  if (p.is_scripted()) {
    throw Error(ErrorCode::ConfigError, "backend \"" + name + "\" is scripted and cannot embed queries");
  }
  return std::make_shared<OpenAIBackend>(p, make_corpus_image_loader(corpus, config.resolution));
}

}  // namespace

std::string adhoc_query_id(std::string_view text) { return "adhoc-" + sha256_hex(text).substr(0, 12); }

Engine::Engine(EngineConfig config, CorpusHandle corpus, Backends backends)
    : config_(std::move(config)), corpus_(std::move(corpus)), backends_(std::move(backends)) {
  if (!corpus_) throw Error(ErrorCode::InvalidArgument, "engine needs a corpus");
}

Engine::Backends Engine::make_backends(const EngineConfig& config, const CorpusHandle& corpus) {
  Backends b;
  b.generation = session_factory(config, config.generation_backend, corpus);
  b.judge = session_factory(config, config.judge_backend, corpus);
  b.visual_embedding = embedding_backend(config, config.visual_embedding_backend, corpus);
  b.textual_embedding = embedding_backend(config, config.textual_embedding_backend, corpus);
  return b;
}

std::shared_ptr<Engine> Engine::open(EngineConfig config) {
  if (config.index.empty()) throw Error(ErrorCode::ConfigError, "no index configured");
  CorpusHandle corpus = open_index(config.index);
  Backends backends = make_backends(config, corpus);
  return std::make_shared<Engine>(std::move(config), std::move(corpus), std::move(backends));
}

WorkflowLimits Engine::limits() const {
  WorkflowLimits limits = config_.limits;
  if (auto it = config_.backends.find(config_.generation_backend); it != config_.backends.end()) {
    limits.few_shot = it->second.few_shot;
  }
  return limits;
}

SessionFactory& Engine::generation() const {
  if (!backends_.generation) throw Error(ErrorCode::BackendError, "no generation backend configured");
  return *backends_.generation;
}

SessionFactory& Engine::judge() const {
  if (!backends_.judge) throw Error(ErrorCode::BackendError, "no judge backend configured");
  return *backends_.judge;
}

QueryRecord Engine::resolve(const QueryInput& input) const {
  if (!input.uid.empty()) return corpus_->query(input.uid);
  if (input.text.empty()) throw Error(ErrorCode::InvalidArgument, "request needs a uid or a query");
  QueryRecord q;
  q.uid = adhoc_query_id(input.text);
  q.query = input.text;
  return q;
}

QueryVectors Engine::vectors_for(const QueryRecord& query, const QueryVectors& supplied, RetrievalMode mode) const {
  QueryVectors out = supplied;
  const QueryVectors sidecar = sidecar_query_vectors(*corpus_, query.uid);
  if (!out.visual) out.visual = sidecar.visual;
  if (!out.textual) out.textual = sidecar.textual;
  if (!out.visual && backends_.visual_embedding) out.visual = backends_.visual_embedding->embed(query.query);
  if (uses_textual(mode) && !out.textual && backends_.textual_embedding) {
    out.textual = backends_.textual_embedding->embed(query.query);
  }
  return out;
}

RetrievalResult Engine::retrieve(const QueryInput& input, RetrievalMode mode) const {
  const QueryRecord q = resolve(input);
  return mmrag::retrieve(q.uid, vectors_for(q, input.vectors, mode), *corpus_, config_.recall, mode);
}

WorkflowResult Engine::ask(const QueryInput& input, RetrievalMode mode, GenerationMode generation_mode) const {
  const QueryRecord q = resolve(input);
  const RetrievalResult r =
      mmrag::retrieve(q.uid, vectors_for(q, input.vectors, mode), *corpus_, config_.recall, mode);
  auto session = generation().open(q.uid, to_string(mode), to_string(generation_mode));
  return generation_mode == GenerationMode::Naive
             ? run_naive_generation(q.uid, q.query, r.merged, *session, limits())
             : run_workflow(q, r, *session, limits());
}

std::vector<EvalReport> Engine::evaluate(std::span<const QueryRecord> dataset, std::span<const GridCell> grid,
                                         const std::filesystem::path& trace_dir) const {
  AblationOptions options;
  options.recall = config_.recall;
  options.limits = limits();
  options.concurrency = config_.eval_concurrency;
  options.trace_dir = trace_dir;
  RetrievalMode widest = RetrievalMode::DynamicHybrid;
  options.query_vectors = [this, widest](const QueryRecord& q) { return vectors_for(q, {}, widest); };
  return run_ablation(dataset, *corpus_, grid, generation(), judge(), options);
}

}  // namespace mmrag
