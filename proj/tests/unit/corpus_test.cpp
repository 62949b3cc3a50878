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
#include <random>

#include <gtest/gtest.h>

#include "mmrag/corpus.hpp"
#include "mmrag/error.hpp"
#include "testing.hpp"

namespace mmrag {
namespace {

using nlohmann::json;
using testing::TempDir;
using testing::write_file;

struct ManifestSpec {
  int docs = 2;
  int pages = 3;
  std::size_t visual_dim = 8;
  std::size_t textual_dim = 4;
  bool chunks = true;
};

// Writes a manifest plus every file it references; returns the manifest path.
std::filesystem::path write_manifest(const TempDir& dir, const ManifestSpec& spec, json* out = nullptr) {
  std::mt19937_64 rng(42);
  json docs = json::array();
  std::string visual, textual, chunks;
  for (int d = 0; d < spec.docs; ++d) {
    const std::string doc = "doc" + std::string(1, static_cast<char>('A' + d));
    json pages = json::array();
    for (int n = 1; n <= spec.pages; ++n) {
      const std::string image = "img/" + doc + "_" + std::to_string(n) + ".png";
      write_file(dir / image, "png");
      pages.push_back({{"page_number", n}, {"image_path", image}});
      const std::string pid = doc + "/p" + std::to_string(n);
      visual += json{{"unit_id", pid}, {"vector", testing::random_vector(rng, spec.visual_dim)}}.dump() + "\n";
      if (spec.chunks) {
        const std::string cid = pid + "#0";
        chunks += json{{"chunk_id", cid}, {"page_id", pid}, {"text", "text " + pid}}.dump() + "\n";
        textual += json{{"unit_id", cid}, {"vector", testing::random_vector(rng, spec.textual_dim)}}.dump() + "\n";
      }
    }
    docs.push_back({{"doc_id", doc}, {"file_name", doc + ".pdf"}, {"pages", pages}});
  }
  write_file(dir / "visual.jsonl", visual);
  json manifest{{"documents", docs},
                {"embeddings", {{"visual", "visual.jsonl"}}},
                {"dimensions", {{"visual", spec.visual_dim}}}};
  if (spec.chunks) {
    write_file(dir / "textual.jsonl", textual);
    write_file(dir / "chunks.jsonl", chunks);
    manifest["embeddings"]["textual"] = "textual.jsonl";
    manifest["dimensions"]["textual"] = spec.textual_dim;
    manifest["chunks"] = "chunks.jsonl";
  }
  if (out) *out = manifest;
  write_file(dir / "manifest.json", manifest.dump(2));
  return dir / "manifest.json";
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an mmrag::Error";
  return ErrorCode::InvalidArgument;
}

TEST(Ingest, CountsPagesAndModalities) {
  TempDir dir;
  const CorpusHandle c = ingest_corpus(write_manifest(dir, {}));
  EXPECT_EQ(c->pages().size(), 6u);
  EXPECT_EQ(c->modality_count(), 2u);
  EXPECT_EQ(c->chunk_count(), 6u);
  EXPECT_EQ(c->documents().size(), 2u);
}

TEST(Ingest, MissingImageIsMissingFile) {
  TempDir dir;
  const auto manifest = write_manifest(dir, {});
  std::filesystem::remove(dir / "img/docB_2.png");
  try {
    ingest_corpus(manifest);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFile);
    EXPECT_NE(std::string(e.what()).find("docB_2.png"), std::string::npos);
  }
}

TEST(Ingest, ShortVectorIsDimensionMismatch) {
  TempDir dir;
  json manifest;
  write_manifest(dir, {.visual_dim = 128, .chunks = false}, &manifest);
  std::mt19937_64 rng(1);
  std::string lines = json{{"unit_id", "docA/p1"}, {"vector", testing::random_vector(rng, 127)}}.dump() + "\n";
  write_file(dir / "visual.jsonl", lines);
  EXPECT_EQ(code_of([&] { ingest_corpus(dir / "manifest.json"); }), ErrorCode::DimensionMismatch);
}

TEST(Ingest, MissingEmbeddingFileNamesPath) {
  TempDir dir;
  const auto manifest = write_manifest(dir, {});
  std::filesystem::remove(dir / "textual.jsonl");
  try {
    ingest_corpus(manifest);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFile);
    EXPECT_NE(std::string(e.what()).find("textual.jsonl"), std::string::npos);
  }
}

TEST(Ingest, DanglingChunkAndUnknownUnit) {
  {
    TempDir dir;
    const auto manifest = write_manifest(dir, {});
    write_file(dir / "chunks.jsonl", testing::read_file(dir / "chunks.jsonl") +
                                         R"({"chunk_id":"x","page_id":"docZ/p9","text":"t"})" + "\n");
    EXPECT_EQ(code_of([&] { ingest_corpus(manifest); }), ErrorCode::DanglingChunk);
  }
  {
    TempDir dir;
    const auto manifest = write_manifest(dir, {});
    write_file(dir / "visual.jsonl", testing::read_file(dir / "visual.jsonl") +
                                         R"({"unit_id":"docZ/p9","vector":[1,0,0,0,0,0,0,0]})" + "\n");
    EXPECT_EQ(code_of([&] { ingest_corpus(manifest); }), ErrorCode::UnknownUnit);
  }
}

TEST(Ingest, PageWithoutVisualVectorIsMissingEmbedding) {
  TempDir dir;
  const auto manifest = write_manifest(dir, {});
  std::string lines = testing::read_file(dir / "visual.jsonl");
  lines.erase(0, lines.find('\n') + 1);
  write_file(dir / "visual.jsonl", lines);
  EXPECT_EQ(code_of([&] { ingest_corpus(manifest); }), ErrorCode::MissingEmbedding);
}

TEST(Ingest, DuplicatePageRejected) {
  TempDir dir;
  json manifest;
  write_manifest(dir, {}, &manifest);
  manifest["documents"][0]["pages"].push_back(manifest["documents"][0]["pages"][0]);
  write_file(dir / "manifest.json", manifest.dump());
  EXPECT_EQ(code_of([&] { ingest_corpus(dir / "manifest.json"); }), ErrorCode::DuplicatePage);
}

TEST(Ingest, VectorsAreUnitNorm) {
  TempDir dir;
  const CorpusHandle c = ingest_corpus(write_manifest(dir, {}));
  for (Modality m : kModalities) {
    for (const auto& [id, v] : c->embeddings(m)->entries()) {
      double s = 0.0;
      for (double x : v) s += x * x;
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-12) << id;
    }
  }
}

TEST(EmbeddingTable, RejectsBadVectors) {
  EmbeddingTable t(Modality::Visual, 2);
  EXPECT_EQ(code_of([&] { t.insert("a", {0.0, 0.0}); }), ErrorCode::ZeroVector);
  EXPECT_EQ(code_of([&] { t.insert("a", {1.0, NAN}); }), ErrorCode::NonFinite);
  EXPECT_EQ(code_of([&] { t.insert("a", {1.0}); }), ErrorCode::DimensionMismatch);
  t.insert("a", {3.0, 4.0});
  EXPECT_DOUBLE_EQ((*t.find("a"))[0], 0.6);
  EXPECT_EQ(code_of([&] { t.insert("a", {1.0, 0.0}); }), ErrorCode::SchemaError);
}

TEST(Persist, IdempotentAndByteIdentical) {
  TempDir dir;
  const auto manifest = write_manifest(dir, {});
  const auto index = dir / "index";
  const PersistOutcome first = persist_index(*ingest_corpus(manifest), index);
  EXPECT_FALSE(first.up_to_date);
  std::map<std::string, std::string> snapshot;
  for (const auto& e : std::filesystem::directory_iterator(index)) {
    snapshot[e.path().filename().string()] = testing::read_file(e.path());
  }
  const PersistOutcome second = persist_index(*ingest_corpus(manifest), index);
  EXPECT_TRUE(second.up_to_date);
  EXPECT_EQ(first.fingerprint, second.fingerprint);
  for (const auto& [name, bytes] : snapshot) EXPECT_EQ(testing::read_file(index / name), bytes) << name;
  EXPECT_FALSE(std::filesystem::exists(dir / "index.tmp"));
}

TEST(Persist, RoundTripsThroughOpenIndex) {
  TempDir dir;
  const CorpusHandle c = ingest_corpus(write_manifest(dir, {}));
  persist_index(*c, dir / "index");
  const CorpusHandle back = open_index(dir / "index");
  ASSERT_EQ(back->pages().size(), c->pages().size());
  for (std::size_t i = 0; i < c->pages().size(); ++i) {
    EXPECT_EQ(back->pages()[i].page_id, c->pages()[i].page_id);
    EXPECT_EQ(back->pages()[i].ocr_chunks.size(), c->pages()[i].ocr_chunks.size());
  }
  for (Modality m : kModalities) EXPECT_EQ(back->embeddings(m)->entries(), c->embeddings(m)->entries());
  // Re-persisting the reopened corpus changes nothing.
  EXPECT_TRUE(persist_index(*back, dir / "index").up_to_date);
}

TEST(Persist, ChangedManifestRewrites) {
  TempDir dir;
  const auto manifest = write_manifest(dir, {});
  persist_index(*ingest_corpus(manifest), dir / "index");
  write_manifest(dir, {.pages = 4});
  const PersistOutcome again = persist_index(*ingest_corpus(manifest), dir / "index");
  EXPECT_FALSE(again.up_to_date);
  EXPECT_EQ(open_index(dir / "index")->pages().size(), 8u);
}

// The annotated sample record shipped with the benchmark description.
const char* kSampleRecord = R"({
    "uid": "04d8bb0db929110f204723c56e5386c1d8d21587_2",
    "query": "What is the temperature of Steam explosion of Pretreatment for Switchgrass and Sugarcane bagasse preparation?",
    "reference_answer": "195-205 Centigrade",
    "meta_info": {
        "file_name": "04d8bb0db929110f204723c586c1d8d21587.pdf",
        "reference_page": [10],
        "source_type": "2d_layout",
        "query_type": "Multi-Hop"
    }
})";

CorpusHandle thirty_page_corpus() {
  Corpus::Parts parts;
  parts.documents.push_back({"sample", "04d8bb0db929110f204723c586c1d8d21587.pdf"});
  parts.visual.emplace(Modality::Visual, 2);
  for (int n = 1; n <= 30; ++n) {
    PageRecord p;
    p.page_id = "sample/p" + std::to_string(n);
    p.doc_id = "sample";
    p.page_number = n;
    parts.visual->insert(p.page_id, {1.0, static_cast<double>(n)});
    parts.pages.push_back(p);
  }
  return Corpus::build(std::move(parts));
}

TEST(Dataset, SampleRecordResolves) {
  const CorpusHandle c = thirty_page_corpus();
  const auto records = parse_dataset(json::array({json::parse(kSampleRecord)}), *c);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].uid, "04d8bb0db929110f204723c56e5386c1d8d21587_2");
  EXPECT_EQ(records[0].reference_page, std::vector<int>{10});
  EXPECT_EQ(records[0].reference_page_ids, std::vector<std::string>{"sample/p10"});
  EXPECT_EQ(records[0].query_type, "Multi-Hop");
  EXPECT_EQ(to_json(records[0]), json::parse(kSampleRecord));
}

TEST(Dataset, SchemaAndReferenceErrors) {
  const CorpusHandle c = thirty_page_corpus();
  json missing = json::parse(kSampleRecord);
  missing.erase("reference_answer");
  EXPECT_EQ(code_of([&] { parse_dataset(json::array({missing}), *c); }), ErrorCode::SchemaError);

  json far = json::parse(kSampleRecord);
  far["meta_info"]["reference_page"] = {99};
  EXPECT_EQ(code_of([&] { parse_dataset(json::array({far}), *c); }), ErrorCode::UnresolvedReference);

  json other = json::parse(kSampleRecord);
  other["meta_info"]["file_name"] = "unknown.pdf";
  EXPECT_EQ(code_of([&] { parse_dataset(json::array({other}), *c); }), ErrorCode::UnresolvedReference);
}

TEST(Dataset, LoadsArrayAndJsonl) {
  TempDir dir;
  const CorpusHandle c = thirty_page_corpus();
  json rec = json::parse(kSampleRecord);
  json second = rec;
  second["uid"] = "other";
  write_file(dir / "a.json", json::array({rec, second}).dump(2));
  write_file(dir / "b.jsonl", rec.dump() + "\n" + second.dump() + "\n");
  EXPECT_EQ(load_dataset(dir / "a.json", *c).size(), 2u);
  EXPECT_EQ(load_dataset(dir / "b.jsonl", *c).size(), 2u);
}

CorpusHandle two_doc_corpus() {
  Corpus::Parts parts;
  parts.documents = {{"docA", "a.pdf"}, {"docB", "b.pdf"}};
  parts.visual.emplace(Modality::Visual, 1);
  for (const auto& [doc, ord] : {std::pair{"docA", 0}, std::pair{"docB", 1}}) {
    for (int n = 1; n <= 6; ++n) {
      PageRecord p;
      p.page_id = std::string(doc) + "/p" + std::to_string(n);
      p.doc_id = doc;
      p.doc_ordinal = ord;
      p.page_number = n;
      parts.visual->insert(p.page_id, {1.0});
      parts.pages.push_back(p);
    }
  }
  return Corpus::build(std::move(parts));
}

TEST(CanonicalOrder, Examples) {
  const CorpusHandle c = two_doc_corpus();
  const auto in = testing::ids({"docB/p2", "docA/p5", "docA/p1"});
  const auto out = canonical_order(*c, in);
  EXPECT_EQ(out, testing::ids({"docA/p1", "docA/p5", "docB/p2"}));
  EXPECT_EQ(canonical_order(*c, in), out);
  EXPECT_TRUE(canonical_order(*c, std::vector<std::string>{}).empty());
  EXPECT_EQ(canonical_order(*c, testing::ids({"docA/p2", "docA/p2"})), testing::ids({"docA/p2"}));
  EXPECT_EQ(code_of([&] { canonical_order(*c, testing::ids({"nope"})); }), ErrorCode::UnknownPage);
}

TEST(CanonicalOrder, MatchesLexicographicKeyOnRandomSets) {
  const CorpusHandle c = two_doc_corpus();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> pick;
    for (const PageRecord& p : c->pages()) {
      if (rng() % 2) pick.push_back(p.page_id);
    }
    std::shuffle(pick.begin(), pick.end(), rng);
    std::vector<std::string> oracle = pick;
    std::sort(oracle.begin(), oracle.end(), [&](const std::string& a, const std::string& b) {
      const PageRecord& pa = c->page(a);
      const PageRecord& pb = c->page(b);
      return std::tie(pa.doc_ordinal, pa.page_number) < std::tie(pb.doc_ordinal, pb.page_number);
    });
    EXPECT_EQ(canonical_order(*c, pick), oracle);
  }
}

}  // namespace
}  // namespace mmrag
