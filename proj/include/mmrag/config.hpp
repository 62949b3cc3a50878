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
#include <string>

#include "mmrag/gmm.hpp"
#include "mmrag/openai_backend.hpp"
#include "mmrag/workflow.hpp"

namespace mmrag {

// Engine configuration. On disk this is an INI-style key = value file:
//
//   index = ./index
//   [recall]          k_base, k_min, k_max, fit_pool, em_tol, em_max_iter, variance_floor
//   [workflow]        max_rounds, memory_cap, parse_retries, temperature, max_tokens
//   [resolution]      thumbnail, full
//   [eval]            concurrency
//   [backend.<name>]  base_url, api_key_env, model, embedding_model, concurrency,
//                     rate_limit, max_retries, backoff_ms, timeout_s, few_shot, scripted
//   [defaults]        generation, judge, embedding_visual, embedding_textual
//
// Relative paths resolve against the config file's directory. Secrets never
// live in the file: a profile names the environment variable holding its key.
struct EngineConfig {
  std::filesystem::path index;
  RecallConfig recall;
  WorkflowLimits limits;
  ResolutionBudget resolution;
  std::size_t eval_concurrency = 1;
  std::map<std::string, BackendProfile> backends;
  std::string generation_backend;
  std::string judge_backend;
  std::string visual_embedding_backend;
  std::string textual_embedding_backend;

  static EngineConfig load(const std::filesystem::path& path);
  static EngineConfig parse(const std::string& text, const std::filesystem::path& base_dir);

  // Fills unset defaults (a lone profile serves every role) and checks that
  // defaults name known profiles and scripted transcripts exist. Throws ConfigError.
  void finalize();
};

}  // namespace mmrag
