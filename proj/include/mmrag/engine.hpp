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

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmrag/config.hpp"
#include "mmrag/corpus.hpp"
#include "mmrag/eval.hpp"
#include "mmrag/gateway.hpp"
#include "mmrag/hybrid.hpp"
#include "mmrag/workflow.hpp"

namespace mmrag {

// A query arriving from the CLI or the service. Either `uid` names a dataset
// query or `text` is asked ad hoc; supplied vectors win over every other source.
struct QueryInput {
  std::string uid;
  std::string text;
  QueryVectors vectors;
};

// Everything a request needs, wired once: the loaded corpus plus the backends
// selected by the config. Safe to share across threads.
class Engine {
 public:
  struct Backends {
    std::shared_ptr<SessionFactory> generation;
    std::shared_ptr<SessionFactory> judge;
    std::shared_ptr<EmbeddingBackend> visual_embedding;
    std::shared_ptr<EmbeddingBackend> textual_embedding;
  };

  Engine(EngineConfig config, CorpusHandle corpus, Backends backends);

  // Opens config.index and builds backends from the profiles.
  static std::shared_ptr<Engine> open(EngineConfig config);
  static Backends make_backends(const EngineConfig& config, const CorpusHandle& corpus);

  const Corpus& corpus() const { return *corpus_; }
  const CorpusHandle& corpus_handle() const { return corpus_; }
  const EngineConfig& config() const { return config_; }
  WorkflowLimits limits() const;

  // Throws UnknownQuery for an unknown uid, InvalidArgument when neither is set.
  QueryRecord resolve(const QueryInput& input) const;
  QueryVectors vectors_for(const QueryRecord& query, const QueryVectors& supplied, RetrievalMode mode) const;

  RetrievalResult retrieve(const QueryInput& input, RetrievalMode mode) const;
  WorkflowResult ask(const QueryInput& input, RetrievalMode mode,
                     GenerationMode generation = GenerationMode::MultiAgent) const;
  std::vector<EvalReport> evaluate(std::span<const QueryRecord> dataset, std::span<const GridCell> grid,
                                   const std::filesystem::path& trace_dir = {}) const;

 private:
  SessionFactory& generation() const;
  SessionFactory& judge() const;

  EngineConfig config_;
  CorpusHandle corpus_;
  Backends backends_;
};

std::string adhoc_query_id(std::string_view text);

}  // namespace mmrag
