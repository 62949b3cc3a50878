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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mmrag/error.hpp"
#include "mmrag/similarity.hpp"
#include "testing.hpp"

namespace mmrag {
namespace {

CorpusHandle orthonormal_corpus() {
  Corpus::Parts parts;
  parts.documents = {{"d", "d.pdf"}};
  parts.visual.emplace(Modality::Visual, 3);
  for (int n = 1; n <= 3; ++n) {
    PageRecord p;
    p.page_id = "p" + std::to_string(n);
    p.doc_id = "d";
    p.page_number = n;
    std::vector<double> e(3, 0.0);
    e[n - 1] = 1.0;
    parts.visual->insert(p.page_id, e);
    parts.pages.push_back(p);
  }
  return Corpus::build(std::move(parts));
}

TEST(Cosine, AnalyticCases) {
  const std::vector<double> a{1.0, 0.0}, b{0.0, 1.0}, c{1.0, 1.0};
  EXPECT_DOUBLE_EQ(cosine(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine(a, b), 0.0);
  EXPECT_NEAR(cosine(a, c), std::sqrt(0.5), 1e-12);
}

TEST(ScoreAll, OrthonormalRanking) {
  const CorpusHandle c = orthonormal_corpus();
  const ScoreVector sv = score_all(std::vector<double>{0.0, 1.0, 0.0}, *c->embeddings(Modality::Visual), *c);
  ASSERT_EQ(sv.scores.size(), 3u);
  EXPECT_EQ(sv.scores[0].page_id, "p2");
  EXPECT_DOUBLE_EQ(sv.scores[0].score, 1.0);
  EXPECT_EQ(sv.scores[1].page_id, "p1");
  EXPECT_EQ(sv.scores[2].page_id, "p3");
  const auto top = top_k(sv, 1);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].page_id, "p2");
}

TEST(ScoreAll, TextualPageTakesBestChunk) {
  Corpus::Parts parts;
  parts.documents = {{"d", "d.pdf"}};
  parts.visual.emplace(Modality::Visual, 2);
  parts.textual.emplace(Modality::Textual, 2);
  for (int n = 1; n <= 2; ++n) {
    PageRecord p;
    p.page_id = "p" + std::to_string(n);
    p.doc_id = "d";
    p.page_number = n;
    parts.visual->insert(p.page_id, {1.0, 0.0});
    parts.pages.push_back(p);
  }
  // Unit query q = (1, 0): chunk scores are their first coordinates.
  parts.chunks = {{"c1", "p1", "a"}, {"c2", "p1", "b"}, {"c3", "p2", "c"}};
  parts.textual->insert("c1", {0.2, std::sqrt(1 - 0.04)});
  parts.textual->insert("c2", {0.9, std::sqrt(1 - 0.81)});
  parts.textual->insert("c3", {0.5, std::sqrt(1 - 0.25)});
  const CorpusHandle c = Corpus::build(std::move(parts));
  const ScoreVector sv = score_all(std::vector<double>{1.0, 0.0}, *c->embeddings(Modality::Textual), *c);
  EXPECT_EQ(sv.scores[0].page_id, "p1");
  EXPECT_NEAR(sv.scores[0].score, 0.9, 1e-12);
  EXPECT_NEAR(sv.scores[1].score, 0.5, 1e-12);
}

TEST(ScoreAll, PageWithoutChunksScoresFloor) {
  Corpus::Parts parts;
  parts.documents = {{"d", "d.pdf"}};
  parts.visual.emplace(Modality::Visual, 2);
  parts.textual.emplace(Modality::Textual, 2);
  for (int n = 1; n <= 2; ++n) {
    PageRecord p;
    p.page_id = "p" + std::to_string(n);
    p.doc_id = "d";
    p.page_number = n;
    parts.visual->insert(p.page_id, {1.0, 0.0});
    parts.pages.push_back(p);
  }
  parts.chunks = {{"c", "p2", "x"}};
  parts.textual->insert("c", {-1.0, 0.0});
  const CorpusHandle c = Corpus::build(std::move(parts));
  const ScoreVector sv = score_all(std::vector<double>{1.0, 0.0}, *c->embeddings(Modality::Textual), *c);
  // p2's only chunk scores -1 and ties with the chunkless p1; canonical order breaks the tie.
  EXPECT_EQ(sv.scores[0].page_id, "p1");
  EXPECT_EQ(sv.scores[0].score, kNoTextScore);
}

// Independent double loop: normalize both sides, dot, sort with an explicit
// (score desc, canonical rank asc) comparator.
std::vector<ScoredPage> brute_force(const std::vector<double>& q, const Corpus& c) {
  std::vector<ScoredPage> out;
  double qn = 0.0;
  for (double x : q) qn += x * x;
  qn = std::sqrt(qn);
  for (const PageRecord& p : c.pages()) {
    const std::vector<double>& v = *c.embeddings(Modality::Visual)->find(p.page_id);
    double dot = 0.0, vn = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      dot += q[i] * v[i];
      vn += v[i] * v[i];
    }
    out.push_back({p.page_id, dot / (qn * std::sqrt(vn))});
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredPage& a, const ScoredPage& b) { return a.score > b.score; });
  return out;
}

TEST(ScoreAll, MatchesBruteForceOnRandomCorpus) {
  const CorpusHandle c = testing::synthetic_corpus(5, 10, 64, 0, 99);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<double> q = testing::random_vector(rng, 64);
    const ScoreVector sv = score_all(q, *c->embeddings(Modality::Visual), *c);
    const auto oracle = brute_force(q, *c);
    ASSERT_EQ(sv.scores.size(), 50u);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      EXPECT_EQ(sv.scores[i].page_id, oracle[i].page_id);
      EXPECT_NEAR(sv.scores[i].score, oracle[i].score, 1e-12);
    }
    const auto top5 = top_k(sv, 5);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(top5[i].page_id, oracle[i].page_id);
  }
}

TEST(ScoreAll, IsPermutationOfPages) {
  const CorpusHandle c = testing::synthetic_corpus(3, 7, 16, 0, 3);
  std::mt19937_64 rng(11);
  const ScoreVector sv = score_all(testing::random_vector(rng, 16), *c->embeddings(Modality::Visual), *c);
  std::vector<std::string> got, want;
  for (const auto& s : sv.scores) got.push_back(s.page_id);
  for (const auto& p : c->pages()) want.push_back(p.page_id);
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  EXPECT_EQ(got, want);
}

TEST(ScoreAll, RankInvariantUnderUniformRescaling) {
  std::mt19937_64 rng(8);
  Corpus::Parts a, b;
  for (Corpus::Parts* parts : {&a, &b}) {
    parts->documents = {{"d", "d.pdf"}};
    parts->visual.emplace(Modality::Visual, 12);
  }
  for (int n = 1; n <= 30; ++n) {
    PageRecord p;
    p.page_id = "p" + std::to_string(n);
    p.doc_id = "d";
    p.page_number = n;
    std::vector<double> v = testing::random_vector(rng, 12);
    a.visual->insert(p.page_id, v);
    for (double& x : v) x *= 37.5;
    b.visual->insert(p.page_id, v);
    a.pages.push_back(p);
    b.pages.push_back(p);
  }
  const CorpusHandle ca = Corpus::build(std::move(a)), cb = Corpus::build(std::move(b));
  const std::vector<double> q = testing::random_vector(rng, 12);
  const ScoreVector sa = score_all(q, *ca->embeddings(Modality::Visual), *ca);
  const ScoreVector sb = score_all(q, *cb->embeddings(Modality::Visual), *cb);
  for (std::size_t i = 0; i < sa.scores.size(); ++i) EXPECT_EQ(sa.scores[i].page_id, sb.scores[i].page_id);
}

TEST(TopK, ClampAndPrefixProperty) {
  const CorpusHandle c = testing::synthetic_corpus(1, 6, 8, 0, 4);
  std::mt19937_64 rng(2);
  const ScoreVector sv = score_all(testing::random_vector(rng, 8), *c->embeddings(Modality::Visual), *c);
  EXPECT_EQ(top_k(sv, 10).size(), 6u);
  for (std::size_t k1 = 1; k1 <= 6; ++k1) {
    for (std::size_t k2 = k1; k2 <= 8; ++k2) {
      const auto a = top_k(sv, k1), b = top_k(sv, k2);
      for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].page_id, b[i].page_id);
    }
  }
  try {
    top_k(sv, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(ScoreAll, QueryDimensionMismatchRejected) {
  const CorpusHandle c = orthonormal_corpus();
  try {
    score_all(std::vector<double>{1.0, 0.0}, *c->embeddings(Modality::Visual), *c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

}  // namespace
}  // namespace mmrag
