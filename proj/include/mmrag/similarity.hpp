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
#include <span>
#include <string>
#include <vector>

#include "mmrag/corpus.hpp"

namespace mmrag {

struct ScoredPage {
  std::string page_id;
  double score = 0.0;

  bool operator==(const ScoredPage&) const = default;
};

// One entry per corpus page, sorted by descending score; equal scores keep
// canonical page order.
struct ScoreVector {
  Modality modality = Modality::Visual;
  std::vector<ScoredPage> scores;

  std::size_t size() const { return scores.size(); }
  bool empty() const { return scores.empty(); }
};

// Throws LengthMismatch or ZeroVector.
double cosine(std::span<const double> a, std::span<const double> b);

// Pages without any OCR chunk score -1 in the textual modality.
inline constexpr double kNoTextScore = -1.0;

// Visual: cosine against each page vector. Textual: cosine against each chunk
// vector, reduced to a page score by max over the page's chunks.
ScoreVector score_all(std::span<const double> query_vec, const EmbeddingTable& table, const Corpus& corpus);

// First min(k, |sv|) entries. Throws InvalidArgument for k == 0.
std::vector<ScoredPage> top_k(const ScoreVector& sv, std::size_t k);

}  // namespace mmrag
