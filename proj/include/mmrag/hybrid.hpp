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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmrag/corpus.hpp"
#include "mmrag/gmm.hpp"

namespace mmrag {

// naive: visual top-k_base; dynamic: visual adaptive recall; hybrid: union of
// static top-k_base from both modalities; dynamic_hybrid: union of adaptive
// recall from both.
enum class RetrievalMode { Naive, Dynamic, Hybrid, DynamicHybrid };

inline constexpr RetrievalMode kRetrievalModes[] = {RetrievalMode::Naive, RetrievalMode::Dynamic,
                                                    RetrievalMode::Hybrid, RetrievalMode::DynamicHybrid};

std::string_view to_string(RetrievalMode mode);
// Accepts "dynamic-hybrid" and "dynamic_hybrid". Throws InvalidArgument.
RetrievalMode parse_retrieval_mode(std::string_view name);
bool uses_textual(RetrievalMode mode);
bool uses_gmm(RetrievalMode mode);

struct QueryVectors {
  std::optional<std::vector<double>> visual;
  std::optional<std::vector<double>> textual;

  const std::optional<std::vector<double>>& get(Modality m) const { return m == Modality::Visual ? visual : textual; }
};

// Vectors from the corpus' query sidecar tables; absent modalities stay empty.
QueryVectors sidecar_query_vectors(const Corpus& corpus, std::string_view uid);

struct RetrievalResult {
  RetrievalMode mode = RetrievalMode::Naive;
  std::string query_id;
  std::map<Modality, ModalityRecall> per_modality;
  std::vector<std::string> merged;  // canonical order, no duplicates

  // Score-ranked view for retrieval metrics: per-modality hits interleaved
  // round-robin (visual first), first occurrence wins.
  std::vector<std::string> ranked() const;
};

// Deduplicated union in canonical order. Throws UnknownPage.
std::vector<std::string> merge(std::span<const ScoredPage> r_text, std::span<const ScoredPage> r_visual,
                               const Corpus& corpus);

// Throws MissingModality when the mode needs a vector or table that is absent,
// EmptyCorpus on an empty corpus.
RetrievalResult retrieve(std::string_view query_id, const QueryVectors& query_vecs, const Corpus& corpus,
                         const RecallConfig& cfg, RetrievalMode mode);

nlohmann::json to_json(const GmmFit& fit);
nlohmann::json to_json(const RetrievalResult& result);

}  // namespace mmrag
