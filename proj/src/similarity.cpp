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

#include "mmrag/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

const std::vector<double>& unit_vector(const EmbeddingTable& table, const std::string& unit_id) {
  const std::vector<double>* v = table.find(unit_id);
  if (!v) {
    throw Error(ErrorCode::MissingEmbedding,
                "no " + std::string(to_string(table.modality())) + " embedding for \"" + unit_id + "\"");
  }
  return *v;
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "cosine of vectors with lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return dot(a, b) / (na * nb);
}

ScoreVector score_all(std::span<const double> query_vec, const EmbeddingTable& table, const Corpus& corpus) {
  if (corpus.pages().empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no pages");
  if (query_vec.size() != table.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(to_string(table.modality())) + " query vector has length " +
                                                  std::to_string(query_vec.size()) + ", table dimension is " +
                                                  std::to_string(table.dimension()));
  }
  const double qnorm = std::sqrt(dot(query_vec, query_vec));
  if (qnorm == 0.0) throw Error(ErrorCode::ZeroVector, "query vector is zero");
  std::vector<double> q(query_vec.begin(), query_vec.end());
  for (double& x : q) x /= qnorm;

  ScoreVector sv;
  sv.modality = table.modality();
  sv.scores.reserve(corpus.pages().size());
  for (const PageRecord& page : corpus.pages()) {
    double score = kNoTextScore;
    if (table.modality() == Modality::Visual) {
      score = dot(q, unit_vector(table, page.page_id));
    } else {
      for (const ChunkRecord& chunk : page.ocr_chunks) {
        score = std::max(score, dot(q, unit_vector(table, chunk.chunk_id)));
      }
    }
    sv.scores.push_back({page.page_id, score});
  }
  // Pages are already in canonical order, so a stable sort breaks ties by it.
  std::stable_sort(sv.scores.begin(), sv.scores.end(),
                   [](const ScoredPage& a, const ScoredPage& b) { return a.score > b.score; });
  return sv;
}

std::vector<ScoredPage> top_k(const ScoreVector& sv, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "top_k requires k >= 1");
  const std::size_t n = std::min(k, sv.scores.size());
  return {sv.scores.begin(), sv.scores.begin() + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace mmrag
