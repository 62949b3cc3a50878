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

#include "mmrag/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mmrag/error.hpp"

namespace fs = std::filesystem;

namespace mmrag {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

[[noreturn]] void bad(int line, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "line " + std::to_string(line) + ": " + what);
}

std::size_t to_size(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size() || x < 0) bad(line, "expected a non-negative integer, got \"" + v + "\"");
    return static_cast<std::size_t>(x);
  } catch (const std::logic_error&) {
    bad(line, "expected a non-negative integer, got \"" + v + "\"");
  }
}

double to_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) bad(line, "expected a number, got \"" + v + "\"");
    return x;
  } catch (const std::logic_error&) {
    bad(line, "expected a number, got \"" + v + "\"");
  }
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(line, "expected true/false, got \"" + v + "\"");
}

fs::path resolve(const fs::path& base, const std::string& v) {
  fs::path p(v);
  return (p.is_relative() && !base.empty() ? base / p : p).lexically_normal();
}

}  // namespace

EngineConfig EngineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  EngineConfig cfg = parse(ss.str(), path.parent_path());
  cfg.finalize();
  return cfg;
}

EngineConfig EngineConfig::parse(const std::string& text, const fs::path& base_dir) {
  EngineConfig cfg;
  bool k_min_set = false, k_max_set = false, pool_set = false;
  std::istringstream in(text);
  std::string raw, section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.starts_with("backend.")) {
        const std::string name = section.substr(8);
        if (name.empty()) bad(lineno, "backend section needs a name");
        cfg.backends[name].name = name;
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) bad(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));

    if (section.empty()) {
      if (key == "index") cfg.index = resolve(base_dir, value);
      else bad(lineno, "unknown key \"" + key + "\"");
    } else if (section == "recall") {
      if (key == "k_base") cfg.recall.k_base = to_size(value, lineno);
      else if (key == "k_min") cfg.recall.k_min = to_size(value, lineno), k_min_set = true;
      else if (key == "k_max") cfg.recall.k_max = to_size(value, lineno), k_max_set = true;
      else if (key == "fit_pool") cfg.recall.fit_pool = to_size(value, lineno), pool_set = true;
      else if (key == "em_tol") cfg.recall.em_tol = to_double(value, lineno);
      else if (key == "em_max_iter") cfg.recall.em_max_iter = static_cast<int>(to_size(value, lineno));
      else if (key == "variance_floor") cfg.recall.variance_floor = to_double(value, lineno);
      else bad(lineno, "unknown recall key \"" + key + "\"");
    } else if (section == "workflow") {
      if (key == "max_rounds") cfg.limits.max_rounds = static_cast<int>(to_size(value, lineno));
      else if (key == "memory_cap") cfg.limits.memory_cap = to_size(value, lineno);
      else if (key == "parse_retries") cfg.limits.parse_retries = static_cast<int>(to_size(value, lineno));
      else if (key == "temperature") cfg.limits.decoding.temperature = to_double(value, lineno);
      else if (key == "max_tokens") cfg.limits.decoding.max_tokens = static_cast<int>(to_size(value, lineno));
      else bad(lineno, "unknown workflow key \"" + key + "\"");
    } else if (section == "resolution") {
      if (key == "thumbnail") cfg.resolution.thumbnail = static_cast<int>(to_size(value, lineno));
      else if (key == "full") cfg.resolution.full = static_cast<int>(to_size(value, lineno));
      else bad(lineno, "unknown resolution key \"" + key + "\"");
    } else if (section == "eval") {
      if (key == "concurrency") cfg.eval_concurrency = to_size(value, lineno);
      else bad(lineno, "unknown eval key \"" + key + "\"");
    } else if (section == "defaults") {
      if (key == "generation") cfg.generation_backend = value;
      else if (key == "judge") cfg.judge_backend = value;
      else if (key == "embedding_visual") cfg.visual_embedding_backend = value;
      else if (key == "embedding_textual") cfg.textual_embedding_backend = value;
      else bad(lineno, "unknown defaults key \"" + key + "\"");
    } else if (section.starts_with("backend.")) {
      BackendProfile& p = cfg.backends[section.substr(8)];
      if (key == "base_url") p.base_url = value;
      else if (key == "api_key_env") p.api_key_env = value;
      else if (key == "model") p.model = value;
      else if (key == "embedding_model") p.embedding_model = value;
      else if (key == "concurrency") p.concurrency = to_size(value, lineno);
      else if (key == "rate_limit") p.rate_limit = to_double(value, lineno);
      else if (key == "max_retries") p.max_retries = static_cast<int>(to_size(value, lineno));
      else if (key == "backoff_ms") p.backoff = std::chrono::milliseconds(to_size(value, lineno));
      else if (key == "timeout_s") p.timeout = std::chrono::seconds(to_size(value, lineno));
      else if (key == "few_shot") p.few_shot = to_bool(value, lineno);
      else if (key == "scripted") p.scripted = resolve(base_dir, value);
      else bad(lineno, "unknown backend key \"" + key + "\"");
    } else {
      bad(lineno, "unknown section [" + section + "]");
    }
  }
  if (!pool_set) cfg.recall.fit_pool = 2 * cfg.recall.k_base;
  if (!k_min_set) cfg.recall.k_min = std::max<std::size_t>(1, cfg.recall.k_base / 2);
  if (!k_max_set) cfg.recall.k_max = cfg.recall.k_base;
  return cfg;
}

void EngineConfig::finalize() {
  if (backends.size() == 1) {
    const std::string& only = backends.begin()->first;
    if (generation_backend.empty()) generation_backend = only;
    if (judge_backend.empty()) judge_backend = only;
  }
  auto check = [&](const std::string& name, const char* role) {
    if (name.empty()) return;
    if (!backends.contains(name)) {
      throw Error(ErrorCode::ConfigError, std::string(role) + " backend \"" + name + "\" is not defined");
    }
  };
  check(generation_backend, "generation");
  check(judge_backend, "judge");
  check(visual_embedding_backend, "visual embedding");
  check(textual_embedding_backend, "textual embedding");
  if (backends.size() > 1 && (generation_backend.empty() || judge_backend.empty())) {
    throw Error(ErrorCode::ConfigError, "several backends defined; [defaults] must name generation and judge");
  }
  for (const auto& [name, p] : backends) {
    if (p.is_scripted()) {
      if (!fs::exists(p.scripted)) {
        throw Error(ErrorCode::MissingFile, "scripted transcript for backend \"" + name + "\" not found: " +
                                                p.scripted.string());
      }
    } else if (p.base_url.empty()) {
      throw Error(ErrorCode::ConfigError, "backend \"" + name + "\" needs base_url or scripted");
    }
  }
  if (!index.empty() && !fs::exists(index)) {
    throw Error(ErrorCode::MissingFile, "index directory not found: " + index.string());
  }
  try {
    recall.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("[recall] ") + e.what());
  }
}

}  // namespace mmrag
