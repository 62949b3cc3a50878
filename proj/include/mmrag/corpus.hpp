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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace mmrag {

enum class Modality { Visual, Textual };

std::string_view to_string(Modality modality);
Modality parse_modality(std::string_view name);

inline constexpr Modality kModalities[] = {Modality::Visual, Modality::Textual};

struct ChunkRecord {
  std::string chunk_id;
  std::string page_id;
  std::string text;
};

struct PageRecord {
  std::string page_id;
  std::string doc_id;
  std::size_t doc_ordinal = 0;
  int page_number = 1;
  std::filesystem::path image_path;
  std::vector<ChunkRecord> ocr_chunks;
};

// Unit vectors keyed by unit id (page id for visual, chunk id for textual,
// query uid for query sidecars). Vectors are normalized on insert.
class EmbeddingTable {
 public:
  EmbeddingTable(Modality modality, std::size_t dimension);

  // Throws DimensionMismatch, ZeroVector, NonFinite or SchemaError (duplicate id).
  void insert(const std::string& unit_id, std::vector<double> vector);

  const std::vector<double>* find(std::string_view unit_id) const;
  const std::map<std::string, std::vector<double>, std::less<>>& entries() const { return entries_; }

  Modality modality() const { return modality_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

 private:
  Modality modality_;
  std::size_t dimension_;
  std::map<std::string, std::vector<double>, std::less<>> entries_;
};

struct QueryRecord {
  std::string uid;
  std::string query;
  std::string reference_answer;
  std::string file_name;
  std::vector<int> reference_page;
  std::string source_type;
  std::string query_type;
  // Resolved against the corpus, same order as reference_page.
  std::vector<std::string> reference_page_ids;
};

nlohmann::json to_json(const QueryRecord& record);

class Corpus;
using CorpusHandle = std::shared_ptr<const Corpus>;

// Immutable page registry plus embeddings and query records. Pages are held in
// canonical order: ascending (doc_ordinal, page_number).
class Corpus {
 public:
  struct Document {
    std::string doc_id;
    std::string file_name;
  };

  struct Parts {
    nlohmann::json manifest;
    std::vector<Document> documents;
    std::vector<PageRecord> pages;  // chunks attached later from `chunks`
    std::vector<ChunkRecord> chunks;
    std::optional<EmbeddingTable> visual;
    std::optional<EmbeddingTable> textual;
    std::vector<QueryRecord> queries;
    std::optional<EmbeddingTable> query_visual;
    std::optional<EmbeddingTable> query_textual;
  };

  // Validates every corpus invariant; throws on the first violation.
  static CorpusHandle build(Parts parts);

  const std::vector<PageRecord>& pages() const { return pages_; }
  const std::vector<Document>& documents() const { return documents_; }
  std::size_t chunk_count() const { return chunk_count_; }
  std::size_t modality_count() const;

  const PageRecord* find_page(std::string_view page_id) const;
  const PageRecord* find_page(std::string_view doc_id, int page_number) const;
  const PageRecord& page(std::string_view page_id) const;  // throws UnknownPage
  // Position in canonical order; throws UnknownPage.
  std::size_t rank(std::string_view page_id) const;

  const ChunkRecord* find_chunk(std::string_view chunk_id) const;
  const Document* find_document_by_file(std::string_view file_name) const;

  const EmbeddingTable* embeddings(Modality modality) const;
  const EmbeddingTable* query_embeddings(Modality modality) const;

  const std::vector<QueryRecord>& queries() const { return queries_; }
  const QueryRecord* find_query(std::string_view uid) const;
  const QueryRecord& query(std::string_view uid) const;  // throws UnknownQuery

  const nlohmann::json& manifest() const { return manifest_; }

 private:
  Corpus() = default;

  nlohmann::json manifest_;
  std::vector<Document> documents_;
  std::vector<PageRecord> pages_;
  std::unordered_map<std::string, std::size_t> page_rank_;
  std::map<std::pair<std::string, int>, std::size_t, std::less<>> doc_page_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> chunk_pos_;
  std::size_t chunk_count_ = 0;
  std::optional<EmbeddingTable> visual_;
  std::optional<EmbeddingTable> textual_;
  std::vector<QueryRecord> queries_;
  std::unordered_map<std::string, std::size_t> query_pos_;
  std::optional<EmbeddingTable> query_visual_;
  std::optional<EmbeddingTable> query_textual_;
};

// Reads the manifest, every file it references, validates and normalizes.
CorpusHandle ingest_corpus(const std::filesystem::path& manifest_path);

// Parses a dataset file (JSON array or JSONL of annotated records) and
// resolves each reference page against `corpus`.
std::vector<QueryRecord> load_dataset(const std::filesystem::path& path, const Corpus& corpus);
std::vector<QueryRecord> parse_dataset(const nlohmann::json& records, const Corpus& corpus);

// Sorted ascending by (doc_ordinal, page_number); duplicates collapse.
std::vector<std::string> canonical_order(const Corpus& corpus, std::span<const std::string> page_ids);

struct PersistOutcome {
  bool up_to_date = false;
  std::string fingerprint;
};

// Writes the index directory atomically (temp directory + rename). When the
// existing index already holds identical content nothing is touched.
PersistOutcome persist_index(const Corpus& corpus, const std::filesystem::path& index_dir);
CorpusHandle open_index(const std::filesystem::path& index_dir);

// JSONL embedding file: {"unit_id": ..., "vector": [...]} per line.
EmbeddingTable load_embedding_file(const std::filesystem::path& path, Modality modality,
                                   std::optional<std::size_t> dimension);

nlohmann::json read_json_file(const std::filesystem::path& path);
std::vector<nlohmann::json> read_jsonl_file(const std::filesystem::path& path);

}  // namespace mmrag
