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

#include "mmrag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mmrag/error.hpp"
#include "mmrag/hash.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mmrag {

namespace {

constexpr std::string_view kIndexFormat = "mmrag-index/1";

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::SchemaError, where + ": missing field \"" + key + "\"");
  }
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw Error(ErrorCode::SchemaError, where + ": field \"" + key + "\" must be a string");
  return v.get<std::string>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

fs::path require_existing(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingFile, "file not found: " + path.string());
  return path;
}

std::string default_page_id(const std::string& doc_id, int page_number) {
  return doc_id + "/p" + std::to_string(page_number);
}

std::optional<std::size_t> declared_dimension(const json& manifest, const char* modality) {
  if (!manifest.contains("dimensions")) return std::nullopt;
  const json& dims = manifest.at("dimensions");
  if (!dims.contains(modality)) return std::nullopt;
  if (!dims.at(modality).is_number_unsigned() || dims.at(modality).get<std::size_t>() == 0) {
    throw Error(ErrorCode::SchemaError, std::string("dimensions.") + modality + " must be a positive integer");
  }
  return dims.at(modality).get<std::size_t>();
}

std::vector<ChunkRecord> parse_chunks(const std::vector<json>& lines, const std::string& where) {
  std::vector<ChunkRecord> chunks;
  chunks.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string at = where + ":" + std::to_string(i + 1);
    chunks.push_back({require_string(lines[i], "chunk_id", at), require_string(lines[i], "page_id", at),
                      require_string(lines[i], "text", at)});
  }
  return chunks;
}

std::vector<double> parse_vector(const json& v, const std::string& where) {
  if (!v.is_array()) throw Error(ErrorCode::SchemaError, where + ": \"vector\" must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& x : v) {
    if (!x.is_number()) throw Error(ErrorCode::SchemaError, where + ": vector entries must be numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

EmbeddingTable table_from_lines(const std::vector<json>& lines, Modality modality,
                                std::optional<std::size_t> dimension, const std::string& where) {
  if (!dimension) {
    if (lines.empty()) {
      throw Error(ErrorCode::SchemaError, where + ": empty embedding file and no declared dimension");
    }
    dimension = require(lines.front(), "vector", where + ":1").size();
    if (*dimension == 0) throw Error(ErrorCode::SchemaError, where + ": zero-length vector");
  }
  EmbeddingTable table(modality, *dimension);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string at = where + ":" + std::to_string(i + 1);
    table.insert(require_string(lines[i], "unit_id", at), parse_vector(require(lines[i], "vector", at), at));
  }
  return table;
}

std::string table_jsonl(const EmbeddingTable& table) {
  std::string out;
  for (const auto& [id, vec] : table.entries()) {
    out += json{{"unit_id", id}, {"vector", vec}}.dump();
    out += '\n';
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::MissingFile, "short write to " + path.string());
}

}  // namespace

std::string_view to_string(Modality modality) {
  return modality == Modality::Visual ? "visual" : "textual";
}

Modality parse_modality(std::string_view name) {
  if (name == "visual") return Modality::Visual;
  if (name == "textual") return Modality::Textual;
  throw Error(ErrorCode::InvalidArgument, "unknown modality: " + std::string(name));
}

// ---------------------------------------------------------------------------
// EmbeddingTable

EmbeddingTable::EmbeddingTable(Modality modality, std::size_t dimension)
    : modality_(modality), dimension_(dimension) {
  if (dimension == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be >= 1");
}

void EmbeddingTable::insert(const std::string& unit_id, std::vector<double> vector) {
  if (vector.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, std::string(to_string(modality_)) + " vector for \"" + unit_id +
                                                  "\" has length " + std::to_string(vector.size()) +
                                                  ", declared dimension is " + std::to_string(dimension_));
  }
  double sq = 0.0;
  for (double x : vector) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "non-finite component in vector \"" + unit_id + "\"");
    sq += x * x;
  }
  if (sq == 0.0) throw Error(ErrorCode::ZeroVector, "zero vector for \"" + unit_id + "\"");
  const double norm = std::sqrt(sq);
  // Already-unit vectors are kept bit-for-bit so reloading an index is exact.
  if (std::abs(norm - 1.0) > 1e-12) {
    for (double& x : vector) x /= norm;
  }
  if (!entries_.emplace(unit_id, std::move(vector)).second) {
    throw Error(ErrorCode::SchemaError, "duplicate embedding unit_id \"" + unit_id + "\"");
  }
}

const std::vector<double>* EmbeddingTable::find(std::string_view unit_id) const {
  auto it = entries_.find(unit_id);
  return it == entries_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Corpus

CorpusHandle Corpus::build(Parts parts) {
  std::shared_ptr<Corpus> corpus(new Corpus());
  corpus->manifest_ = std::move(parts.manifest);

  std::set<std::string, std::less<>> doc_ids;
  for (const Document& doc : parts.documents) {
    if (!doc_ids.insert(doc.doc_id).second) {
      throw Error(ErrorCode::SchemaError, "duplicate doc_id \"" + doc.doc_id + "\"");
    }
  }
  corpus->documents_ = std::move(parts.documents);

  auto& pages = parts.pages;
  std::stable_sort(pages.begin(), pages.end(), [](const PageRecord& a, const PageRecord& b) {
    return std::tie(a.doc_ordinal, a.page_number) < std::tie(b.doc_ordinal, b.page_number);
  });
  for (std::size_t i = 0; i < pages.size(); ++i) {
    const PageRecord& p = pages[i];
    if (p.page_number < 1) {
      throw Error(ErrorCode::SchemaError, "page_number must be >= 1 (" + p.page_id + ")");
    }
    if (!corpus->page_rank_.emplace(p.page_id, i).second) {
      throw Error(ErrorCode::DuplicatePage, "duplicate page_id \"" + p.page_id + "\"");
    }
    if (!corpus->doc_page_.emplace(std::make_pair(p.doc_id, p.page_number), i).second) {
      throw Error(ErrorCode::DuplicatePage,
                  "page " + std::to_string(p.page_number) + " of \"" + p.doc_id + "\" listed twice");
    }
    const bool doc_start = i == 0 || pages[i - 1].doc_ordinal != p.doc_ordinal;
    const int expected = doc_start ? 1 : pages[i - 1].page_number + 1;
    if (p.page_number != expected) {
      throw Error(ErrorCode::SchemaError, "page numbers of \"" + p.doc_id + "\" are not contiguous from 1 (found " +
                                              std::to_string(p.page_number) + ", expected " +
                                              std::to_string(expected) + ")");
    }
  }
  corpus->pages_ = std::move(pages);

  for (ChunkRecord& chunk : parts.chunks) {
    auto it = corpus->page_rank_.find(chunk.page_id);
    if (it == corpus->page_rank_.end()) {
      throw Error(ErrorCode::DanglingChunk,
                  "chunk \"" + chunk.chunk_id + "\" references unknown page \"" + chunk.page_id + "\"");
    }
    if (trim(chunk.text).empty()) {
      throw Error(ErrorCode::SchemaError, "chunk \"" + chunk.chunk_id + "\" has empty text");
    }
    auto& owner = corpus->pages_[it->second].ocr_chunks;
    if (!corpus->chunk_pos_.emplace(chunk.chunk_id, std::make_pair(it->second, owner.size())).second) {
      throw Error(ErrorCode::SchemaError, "duplicate chunk_id \"" + chunk.chunk_id + "\"");
    }
    owner.push_back(std::move(chunk));
  }
  corpus->chunk_count_ = corpus->chunk_pos_.size();

  if (parts.visual) {
    for (const auto& [id, vec] : parts.visual->entries()) {
      if (!corpus->page_rank_.contains(id)) {
        throw Error(ErrorCode::UnknownUnit, "visual embedding for unknown page \"" + id + "\"");
      }
    }
    for (const PageRecord& p : corpus->pages_) {
      if (!parts.visual->find(p.page_id)) {
        throw Error(ErrorCode::MissingEmbedding, "no visual embedding for page \"" + p.page_id + "\"");
      }
    }
  }
  if (parts.textual) {
    for (const auto& [id, vec] : parts.textual->entries()) {
      if (!corpus->chunk_pos_.contains(id)) {
        throw Error(ErrorCode::UnknownUnit, "textual embedding for unknown chunk \"" + id + "\"");
      }
    }
    for (const auto& [id, pos] : corpus->chunk_pos_) {
      if (!parts.textual->find(id)) {
        throw Error(ErrorCode::MissingEmbedding, "no textual embedding for chunk \"" + id + "\"");
      }
    }
  }
  corpus->visual_ = std::move(parts.visual);
  corpus->textual_ = std::move(parts.textual);

  for (std::size_t i = 0; i < parts.queries.size(); ++i) {
    const QueryRecord& q = parts.queries[i];
    if (!corpus->query_pos_.emplace(q.uid, i).second) {
      throw Error(ErrorCode::SchemaError, "duplicate query uid \"" + q.uid + "\"");
    }
    for (const std::string& pid : q.reference_page_ids) {
      if (!corpus->page_rank_.contains(pid)) {
        throw Error(ErrorCode::UnresolvedReference, "query \"" + q.uid + "\" references unknown page " + pid);
      }
    }
  }
  corpus->queries_ = std::move(parts.queries);
  for (auto* table : {&parts.query_visual, &parts.query_textual}) {
    if (!*table) continue;
    for (const auto& [uid, vec] : (*table)->entries()) {
      if (!corpus->query_pos_.contains(uid)) {
        throw Error(ErrorCode::UnknownUnit, "query embedding for unknown uid \"" + uid + "\"");
      }
    }
  }
  corpus->query_visual_ = std::move(parts.query_visual);
  corpus->query_textual_ = std::move(parts.query_textual);
  return corpus;
}

std::size_t Corpus::modality_count() const {
  return (visual_ ? 1 : 0) + (textual_ ? 1 : 0);
}

const PageRecord* Corpus::find_page(std::string_view page_id) const {
  auto it = page_rank_.find(std::string(page_id));
  return it == page_rank_.end() ? nullptr : &pages_[it->second];
}

const PageRecord* Corpus::find_page(std::string_view doc_id, int page_number) const {
  auto it = doc_page_.find(std::make_pair(std::string(doc_id), page_number));
  return it == doc_page_.end() ? nullptr : &pages_[it->second];
}

const PageRecord& Corpus::page(std::string_view page_id) const {
  const PageRecord* p = find_page(page_id);
  if (!p) throw Error(ErrorCode::UnknownPage, "unknown page \"" + std::string(page_id) + "\"");
  return *p;
}

std::size_t Corpus::rank(std::string_view page_id) const {
  auto it = page_rank_.find(std::string(page_id));
  if (it == page_rank_.end()) throw Error(ErrorCode::UnknownPage, "unknown page \"" + std::string(page_id) + "\"");
  return it->second;
}

const ChunkRecord* Corpus::find_chunk(std::string_view chunk_id) const {
  auto it = chunk_pos_.find(std::string(chunk_id));
  if (it == chunk_pos_.end()) return nullptr;
  return &pages_[it->second.first].ocr_chunks[it->second.second];
}

const Corpus::Document* Corpus::find_document_by_file(std::string_view file_name) const {
  const std::string stem = fs::path(std::string(file_name)).stem().string();
  for (const Document& doc : documents_) {
    if (doc.file_name == file_name || doc.doc_id == file_name) return &doc;
  }
  for (const Document& doc : documents_) {
    if (doc.doc_id == stem) return &doc;
  }
  return nullptr;
}

const EmbeddingTable* Corpus::embeddings(Modality modality) const {
  const auto& t = modality == Modality::Visual ? visual_ : textual_;
  return t ? &*t : nullptr;
}

const EmbeddingTable* Corpus::query_embeddings(Modality modality) const {
  const auto& t = modality == Modality::Visual ? query_visual_ : query_textual_;
  return t ? &*t : nullptr;
}

const QueryRecord* Corpus::find_query(std::string_view uid) const {
  auto it = query_pos_.find(std::string(uid));
  return it == query_pos_.end() ? nullptr : &queries_[it->second];
}

const QueryRecord& Corpus::query(std::string_view uid) const {
  const QueryRecord* q = find_query(uid);
  if (!q) throw Error(ErrorCode::UnknownQuery, "unknown query uid \"" + std::string(uid) + "\"");
  return *q;
}

// ---------------------------------------------------------------------------
// File formats

json read_json_file(const fs::path& path) {
  const std::string text = slurp(require_existing(path));
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

std::vector<json> read_jsonl_file(const fs::path& path) {
  std::istringstream in(slurp(require_existing(path)));
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::SchemaError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

EmbeddingTable load_embedding_file(const fs::path& path, Modality modality, std::optional<std::size_t> dimension) {
  return table_from_lines(read_jsonl_file(path), modality, dimension, path.string());
}

json to_json(const QueryRecord& r) {
  return json{{"uid", r.uid},
              {"query", r.query},
              {"reference_answer", r.reference_answer},
              {"meta_info",
               {{"file_name", r.file_name},
                {"reference_page", r.reference_page},
                {"source_type", r.source_type},
                {"query_type", r.query_type}}}};
}

std::vector<QueryRecord> parse_dataset(const json& records, const Corpus& corpus) {
  if (!records.is_array()) throw Error(ErrorCode::SchemaError, "dataset must be a JSON array of records");
  std::vector<QueryRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& rec = records[i];
    std::string where = "record " + std::to_string(i);
    QueryRecord q;
    q.uid = require_string(rec, "uid", where);
    where += " (" + q.uid + ")";
    q.query = require_string(rec, "query", where);
    q.reference_answer = require_string(rec, "reference_answer", where);
    const json& meta = require(rec, "meta_info", where);
    q.file_name = require_string(meta, "file_name", where + ".meta_info");
    q.source_type = require_string(meta, "source_type", where + ".meta_info");
    q.query_type = require_string(meta, "query_type", where + ".meta_info");
    const json& pages = require(meta, "reference_page", where + ".meta_info");
    if (!pages.is_array() || pages.empty()) {
      throw Error(ErrorCode::SchemaError, where + ": reference_page must be a non-empty array");
    }
    for (const json& p : pages) {
      if (!p.is_number_integer()) throw Error(ErrorCode::SchemaError, where + ": reference_page entries must be integers");
      q.reference_page.push_back(p.get<int>());
    }
    const Corpus::Document* doc = corpus.find_document_by_file(q.file_name);
    if (!doc) {
      throw Error(ErrorCode::UnresolvedReference, where + ": no document matches file_name \"" + q.file_name + "\"");
    }
    for (int number : q.reference_page) {
      const PageRecord* page = corpus.find_page(doc->doc_id, number);
      if (!page) {
        throw Error(ErrorCode::UnresolvedReference,
                    where + ": page " + std::to_string(number) + " not in document \"" + doc->doc_id + "\"");
      }
      q.reference_page_ids.push_back(page->page_id);
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<QueryRecord> load_dataset(const fs::path& path, const Corpus& corpus) {
  const std::string text = slurp(require_existing(path));
  json records;
  try {
    records = json::parse(text);
  } catch (const json::parse_error&) {
    records = json::array();
    for (json& line : read_jsonl_file(path)) records.push_back(std::move(line));
  }
  if (records.is_object()) records = json::array({records});
  return parse_dataset(records, corpus);
}

std::vector<std::string> canonical_order(const Corpus& corpus, std::span<const std::string> page_ids) {
  std::vector<std::size_t> ranks;
  ranks.reserve(page_ids.size());
  for (const std::string& id : page_ids) ranks.push_back(corpus.rank(id));
  std::sort(ranks.begin(), ranks.end());
  ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
  std::vector<std::string> out;
  out.reserve(ranks.size());
  for (std::size_t r : ranks) out.push_back(corpus.pages()[r].page_id);
  return out;
}

// ---------------------------------------------------------------------------
// Ingest and persistence

CorpusHandle ingest_corpus(const fs::path& manifest_path) {
  json manifest = read_json_file(manifest_path);
  if (!manifest.is_object()) throw Error(ErrorCode::SchemaError, "manifest must be a JSON object");
  const fs::path base = fs::absolute(manifest_path).parent_path();

  Corpus::Parts parts;
  const json& docs = require(manifest, "documents", "manifest");
  if (!docs.is_array()) throw Error(ErrorCode::SchemaError, "manifest: documents must be an array");
  for (std::size_t ordinal = 0; ordinal < docs.size(); ++ordinal) {
    const json& d = docs[ordinal];
    const std::string where = "documents[" + std::to_string(ordinal) + "]";
    Corpus::Document doc{require_string(d, "doc_id", where), d.value("file_name", std::string())};
    const json& pages = require(d, "pages", where);
    if (!pages.is_array()) throw Error(ErrorCode::SchemaError, where + ": pages must be an array");
    for (const json& p : pages) {
      const json& number = require(p, "page_number", where + ".pages");
      if (!number.is_number_integer()) throw Error(ErrorCode::SchemaError, where + ": page_number must be an integer");
      PageRecord page;
      page.doc_id = doc.doc_id;
      page.doc_ordinal = ordinal;
      page.page_number = number.get<int>();
      page.page_id = p.contains("page_id") ? require_string(p, "page_id", where) : default_page_id(doc.doc_id, page.page_number);
      page.image_path = require_existing(resolve(base, require_string(p, "image_path", where + ".pages")));
      parts.pages.push_back(std::move(page));
    }
    parts.documents.push_back(std::move(doc));
  }

  if (manifest.contains("chunks")) {
    const fs::path path = resolve(base, require_string(manifest, "chunks", "manifest"));
    parts.chunks = parse_chunks(read_jsonl_file(path), path.string());
  }

  const json& embeddings = require(manifest, "embeddings", "manifest");
  if (embeddings.contains("visual")) {
    const fs::path path = resolve(base, require_string(embeddings, "visual", "manifest.embeddings"));
    parts.visual = load_embedding_file(path, Modality::Visual, declared_dimension(manifest, "visual"));
  }
  if (embeddings.contains("textual")) {
    const fs::path path = resolve(base, require_string(embeddings, "textual", "manifest.embeddings"));
    parts.textual = load_embedding_file(path, Modality::Textual, declared_dimension(manifest, "textual"));
  }
  if (!parts.visual && !parts.textual) {
    throw Error(ErrorCode::SchemaError, "manifest: embeddings must name at least one modality");
  }

  parts.manifest = manifest;
  if (!manifest.contains("queries")) return Corpus::build(std::move(parts));

  // Queries are resolved against the page registry, so build that first.
  const json queries = manifest.at("queries");
  Corpus::Parts page_parts;
  page_parts.documents = parts.documents;
  page_parts.pages = parts.pages;
  CorpusHandle pages_only = Corpus::build(std::move(page_parts));
  if (queries.contains("dataset")) {
    parts.queries = load_dataset(resolve(base, require_string(queries, "dataset", "manifest.queries")), *pages_only);
  }
  if (queries.contains("embeddings")) {
    const json& qe = queries.at("embeddings");
    if (qe.contains("visual")) {
      parts.query_visual = load_embedding_file(resolve(base, require_string(qe, "visual", "manifest.queries.embeddings")),
                                               Modality::Visual, parts.visual ? std::optional(parts.visual->dimension()) : std::nullopt);
    }
    if (qe.contains("textual")) {
      parts.query_textual = load_embedding_file(resolve(base, require_string(qe, "textual", "manifest.queries.embeddings")),
                                                Modality::Textual, parts.textual ? std::optional(parts.textual->dimension()) : std::nullopt);
    }
  }
  return Corpus::build(std::move(parts));
}

namespace {

std::map<std::string, std::string> index_files(const Corpus& corpus) {
  std::map<std::string, std::string> files;
  files["manifest.json"] = corpus.manifest().dump(2) + "\n";

  json docs = json::array();
  for (const auto& d : corpus.documents()) docs.push_back({{"doc_id", d.doc_id}, {"file_name", d.file_name}});
  files["documents.json"] = docs.dump(2) + "\n";

  std::string pages, chunks;
  for (const PageRecord& p : corpus.pages()) {
    pages += json{{"page_id", p.page_id},
                  {"doc_id", p.doc_id},
                  {"doc_ordinal", p.doc_ordinal},
                  {"page_number", p.page_number},
                  {"image_path", p.image_path.string()}}
                 .dump() + "\n";
    for (const ChunkRecord& c : p.ocr_chunks) {
      chunks += json{{"chunk_id", c.chunk_id}, {"page_id", c.page_id}, {"text", c.text}}.dump() + "\n";
    }
  }
  files["pages.jsonl"] = pages;
  files["chunks.jsonl"] = chunks;

  for (Modality m : kModalities) {
    const std::string name(to_string(m));
    if (const EmbeddingTable* t = corpus.embeddings(m)) files["embeddings." + name + ".jsonl"] = table_jsonl(*t);
    if (const EmbeddingTable* t = corpus.query_embeddings(m)) files["queries." + name + ".jsonl"] = table_jsonl(*t);
  }
  json queries = json::array();
  for (const QueryRecord& q : corpus.queries()) queries.push_back(to_json(q));
  files["queries.json"] = queries.dump(2) + "\n";
  return files;
}

std::string fingerprint(const std::map<std::string, std::string>& files) {
  std::string all;
  for (const auto& [name, content] : files) {
    all += name;
    all += '\0';
    all += sha256_hex(content);
    all += '\n';
  }
  return sha256_hex(all);
}

}  // namespace

PersistOutcome persist_index(const Corpus& corpus, const fs::path& index_dir) {
  auto files = index_files(corpus);
  const std::string fp = fingerprint(files);

  json meta{{"format", kIndexFormat},
            {"fingerprint", fp},
            {"pages", corpus.pages().size()},
            {"chunks", corpus.chunk_count()},
            {"queries", corpus.queries().size()}};
  for (Modality m : kModalities) {
    if (const EmbeddingTable* t = corpus.embeddings(m)) meta["dimensions"][std::string(to_string(m))] = t->dimension();
  }

  const fs::path meta_path = index_dir / "meta.json";
  if (fs::exists(meta_path)) {
    try {
      if (read_json_file(meta_path).value("fingerprint", "") == fp) return {true, fp};
    } catch (const Error&) {
      // unreadable meta: rebuild below
    }
  }

  files["meta.json"] = meta.dump(2) + "\n";
  fs::path parent = index_dir.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  const fs::path tmp = fs::path(index_dir.string() + ".tmp");
  const fs::path old = fs::path(index_dir.string() + ".old");
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  for (const auto& [name, content] : files) write_file(tmp / name, content);
  fs::remove_all(old);
  if (fs::exists(index_dir)) fs::rename(index_dir, old);
  fs::rename(tmp, index_dir);
  fs::remove_all(old);
  return {false, fp};
}

CorpusHandle open_index(const fs::path& index_dir) {
  const json meta = read_json_file(index_dir / "meta.json");
  if (meta.value("format", "") != kIndexFormat) {
    throw Error(ErrorCode::SchemaError, index_dir.string() + ": not an index directory (format mismatch)");
  }
  Corpus::Parts parts;
  parts.manifest = read_json_file(index_dir / "manifest.json");
  for (const json& d : read_json_file(index_dir / "documents.json")) {
    parts.documents.push_back({d.at("doc_id").get<std::string>(), d.at("file_name").get<std::string>()});
  }
  for (const json& line : read_jsonl_file(index_dir / "pages.jsonl")) {
    PageRecord p;
    p.page_id = line.at("page_id").get<std::string>();
    p.doc_id = line.at("doc_id").get<std::string>();
    p.doc_ordinal = line.at("doc_ordinal").get<std::size_t>();
    p.page_number = line.at("page_number").get<int>();
    p.image_path = line.at("image_path").get<std::string>();
    parts.pages.push_back(std::move(p));
  }
  parts.chunks = parse_chunks(read_jsonl_file(index_dir / "chunks.jsonl"), "chunks.jsonl");
  auto optional_table = [&](const std::string& file, Modality m) -> std::optional<EmbeddingTable> {
    if (!fs::exists(index_dir / file)) return std::nullopt;
    std::optional<std::size_t> dim;
    const std::string name(to_string(m));
    if (meta.contains("dimensions") && meta.at("dimensions").contains(name)) {
      dim = meta.at("dimensions").at(name).get<std::size_t>();
    }
    return load_embedding_file(index_dir / file, m, dim);
  };
  parts.visual = optional_table("embeddings.visual.jsonl", Modality::Visual);
  parts.textual = optional_table("embeddings.textual.jsonl", Modality::Textual);
  parts.query_visual = optional_table("queries.visual.jsonl", Modality::Visual);
  parts.query_textual = optional_table("queries.textual.jsonl", Modality::Textual);

  const json queries = read_json_file(index_dir / "queries.json");
  if (!queries.empty()) {
    Corpus::Parts page_parts;
    page_parts.documents = parts.documents;
    page_parts.pages = parts.pages;
    parts.queries = parse_dataset(queries, *Corpus::build(std::move(page_parts)));
  }
  return Corpus::build(std::move(parts));
}

}  // namespace mmrag
