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

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmrag/corpus.hpp"
#include "mmrag/gateway.hpp"
#include "mmrag/scripted.hpp"

namespace mmrag::testing {

inline std::filesystem::path source_dir() { return MMRAG_SOURCE_DIR; }
inline std::filesystem::path smoke_dir() { return source_dir() / "tests" / "fixtures" / "smoke"; }
inline std::filesystem::path golden_dir() { return source_dir() / "tests" / "golden"; }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mmrag-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

// docs x pages_per_doc pages named d<i>/p<n>, with a random visual table and,
// when textual_dim > 0, two chunks per page with their own vectors.
inline CorpusHandle synthetic_corpus(std::size_t docs, int pages_per_doc, std::size_t visual_dim,
                                     std::size_t textual_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Corpus::Parts parts;
  if (visual_dim > 0) parts.visual.emplace(Modality::Visual, visual_dim);
  if (textual_dim > 0) parts.textual.emplace(Modality::Textual, textual_dim);
  for (std::size_t d = 0; d < docs; ++d) {
    const std::string doc = "d" + std::to_string(d);
    parts.documents.push_back({doc, doc + ".pdf"});
    for (int n = 1; n <= pages_per_doc; ++n) {
      PageRecord p;
      p.page_id = doc + "/p" + std::to_string(n);
      p.doc_id = doc;
      p.doc_ordinal = d;
      p.page_number = n;
      p.image_path = "/nonexistent/" + doc + "_" + std::to_string(n) + ".png";
      if (parts.visual) parts.visual->insert(p.page_id, random_vector(rng, visual_dim));
      if (parts.textual) {
        for (int c = 0; c < 2; ++c) {
          const std::string chunk = p.page_id + "#c" + std::to_string(c);
          parts.chunks.push_back({chunk, p.page_id, "text of " + chunk});
          parts.textual->insert(chunk, random_vector(rng, textual_dim));
        }
      }
      parts.pages.push_back(std::move(p));
    }
  }
  return Corpus::build(std::move(parts));
}

// Page ids p1..pn in one document, no embeddings; enough for workflow tests.
inline CorpusHandle flat_corpus(int n) { return synthetic_corpus(1, n, 4, 0, 1); }

inline std::vector<std::string> ids(std::initializer_list<const char*> list) { return {list.begin(), list.end()}; }

inline TranscriptEntry reply(std::string agent, int step, const nlohmann::json& body) {
  return {std::move(agent), step, std::nullopt, std::nullopt, std::nullopt, body.dump()};
}

inline TranscriptEntry raw_reply(std::string agent, int step, std::string text) {
  return {std::move(agent), step, std::nullopt, std::nullopt, std::nullopt, std::move(text)};
}

}  // namespace mmrag::testing
