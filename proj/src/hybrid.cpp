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

#include "mmrag/hybrid.hpp"

#include <set>

#include "mmrag/error.hpp"

using nlohmann::json;

namespace mmrag {

std::string_view to_string(RetrievalMode mode) {
  switch (mode) {
    case RetrievalMode::Naive: return "naive";
    case RetrievalMode::Dynamic: return "dynamic";
    case RetrievalMode::Hybrid: return "hybrid";
    case RetrievalMode::DynamicHybrid: return "dynamic_hybrid";
  }
  return "naive";
}

RetrievalMode parse_retrieval_mode(std::string_view name) {
  if (name == "naive") return RetrievalMode::Naive;
  if (name == "dynamic") return RetrievalMode::Dynamic;
  if (name == "hybrid") return RetrievalMode::Hybrid;
  if (name == "dynamic-hybrid" || name == "dynamic_hybrid") return RetrievalMode::DynamicHybrid;
  throw Error(ErrorCode::InvalidArgument,
              "unknown retrieval mode \"" + std::string(name) + "\" (naive|dynamic|hybrid|dynamic-hybrid)");
}

bool uses_textual(RetrievalMode mode) {
  return mode == RetrievalMode::Hybrid || mode == RetrievalMode::DynamicHybrid;
}

bool uses_gmm(RetrievalMode mode) {
  return mode == RetrievalMode::Dynamic || mode == RetrievalMode::DynamicHybrid;
}

QueryVectors sidecar_query_vectors(const Corpus& corpus, std::string_view uid) {
  QueryVectors out;
  if (const EmbeddingTable* t = corpus.query_embeddings(Modality::Visual)) {
    if (const auto* v = t->find(uid)) out.visual = *v;
  }
  if (const EmbeddingTable* t = corpus.query_embeddings(Modality::Textual)) {
    if (const auto* v = t->find(uid)) out.textual = *v;
  }
  return out;
}

std::vector<std::string> RetrievalResult::ranked() const {
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen;
  std::vector<const std::vector<ScoredPage>*> lists;
  for (Modality m : kModalities) {
    if (auto it = per_modality.find(m); it != per_modality.end()) lists.push_back(&it->second.hits);
  }
  for (std::size_t i = 0;; ++i) {
    bool any = false;
    for (const auto* hits : lists) {
      if (i >= hits->size()) continue;
      any = true;
      if (seen.insert((*hits)[i].page_id).second) out.push_back((*hits)[i].page_id);
    }
    if (!any) break;
  }
  return out;
}

std::vector<std::string> merge(std::span<const ScoredPage> r_text, std::span<const ScoredPage> r_visual,
                               const Corpus& corpus) {
  std::vector<std::string> ids;
  ids.reserve(r_text.size() + r_visual.size());
  for (const ScoredPage& p : r_text) ids.push_back(p.page_id);
  for (const ScoredPage& p : r_visual) ids.push_back(p.page_id);
  return canonical_order(corpus, ids);
}

RetrievalResult retrieve(std::string_view query_id, const QueryVectors& query_vecs, const Corpus& corpus,
                         const RecallConfig& cfg, RetrievalMode mode) {
  cfg.validate();
  if (corpus.pages().empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no pages");

  std::vector<Modality> needed{Modality::Visual};
  if (uses_textual(mode)) needed.push_back(Modality::Textual);

  RetrievalResult result;
  result.mode = mode;
  result.query_id = std::string(query_id);
  for (Modality m : needed) {
    const EmbeddingTable* table = corpus.embeddings(m);
    const auto& vec = query_vecs.get(m);
    if (!table) {
      throw Error(ErrorCode::MissingModality, "mode " + std::string(to_string(mode)) + " needs " +
                                                  std::string(to_string(m)) + " embeddings, none ingested");
    }
    if (!vec) {
      throw Error(ErrorCode::MissingModality, "mode " + std::string(to_string(mode)) + " needs a " +
                                                  std::string(to_string(m)) + " query vector for \"" +
                                                  std::string(query_id) + "\"");
    }
    const ScoreVector sv = score_all(*vec, *table, corpus);
    result.per_modality.emplace(m, uses_gmm(mode) ? adaptive_recall(sv, cfg) : static_recall(sv, cfg));
  }

  static const std::vector<ScoredPage> kNone;
  auto hits_of = [&](Modality m) -> const std::vector<ScoredPage>& {
    auto it = result.per_modality.find(m);
    return it == result.per_modality.end() ? kNone : it->second.hits;
  };
  result.merged = merge(hits_of(Modality::Textual), hits_of(Modality::Visual), corpus);
  return result;
}

json to_json(const GmmFit& fit) {
  return json{{"w_F", fit.w_F},
              {"w_T", fit.w_T},
              {"mu_F", fit.mu_F},
              {"mu_T", fit.mu_T},
              {"var_F", fit.var_F},
              {"var_T", fit.var_T},
              {"log_likelihood", fit.log_likelihood},
              {"iterations", fit.iterations},
              {"converged", fit.converged}};
}

json to_json(const RetrievalResult& result) {
  json per = json::object();
  for (const auto& [m, rec] : result.per_modality) {
    json hits = json::array();
    for (const ScoredPage& h : rec.hits) hits.push_back({{"page_id", h.page_id}, {"score", h.score}});
    json entry{{"k_used", rec.k_used}, {"hits", hits}, {"fallback", rec.fallback}};
    entry["gmm_audit"] = rec.gmm ? to_json(*rec.gmm) : json(nullptr);
    if (rec.fallback) entry["fallback_reason"] = rec.fallback_reason;
    per[std::string(to_string(m))] = std::move(entry);
  }
  return json{{"query_id", result.query_id},
              {"mode", to_string(result.mode)},
              {"per_modality", per},
              {"merged", result.merged}};
}

}  // namespace mmrag
