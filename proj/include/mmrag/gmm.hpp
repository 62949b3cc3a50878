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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmrag/similarity.hpp"

namespace mmrag {

// Two-component 1-D Gaussian mixture. F is the low-similarity component, T the
// high-similarity one; after fitting mu_T >= mu_F always holds.
struct GmmParams {
  double w_F = 0.5;
  double w_T = 0.5;
  double mu_F = 0.0;
  double mu_T = 0.0;
  double var_F = 1.0;
  double var_T = 1.0;
};

struct GmmFit : GmmParams {
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  // Log-likelihood of the initial parameters followed by one entry per EM step.
  std::vector<double> log_likelihood_history;
};

struct RecallConfig {
  std::size_t k_base = 10;
  std::size_t fit_pool = 20;
  std::size_t k_min = 5;
  std::size_t k_max = 10;
  double em_tol = 1e-6;
  int em_max_iter = 200;
  double variance_floor = 1e-6;

  // Defaults derived from a base K: pool 2K, clamp to [K/2, K].
  static RecallConfig with_base(std::size_t k_base);

  // Throws InvalidArgument unless 1 <= k_min <= k_max <= fit_pool and k_base >= 1.
  void validate() const;
};

// Called once for the initial parameters (iteration 0) and after every M-step
// with the parameters just produced and their data log-likelihood.
using EmObserver = std::function<void(int iteration, const GmmParams& params, double log_likelihood)>;

// EM fit. Initialization: means at the 25th/75th percentiles, equal weights,
// variances = sample variance / 4 (floored). Throws DegenerateInput when fewer
// than 4 scores are given or all scores are equal within 1e-12, NonFinite on
// NaN/inf input.
GmmFit fit_gmm(std::span<const double> scores, const RecallConfig& cfg, const EmObserver& observer = {});

double mixture_log_likelihood(const GmmParams& params, std::span<const double> scores);

// Posterior P(T | s).
double responsibility_T(const GmmParams& params, double score);

// Number of fit-pool pages whose posterior favours T (ties go to T), before clamping.
std::size_t raw_t_count(const GmmParams& params, const ScoreVector& sv, const RecallConfig& cfg);

// raw_t_count clamped to [k_min, k_max].
std::size_t dynamic_k(const GmmFit& fit, const ScoreVector& sv, const RecallConfig& cfg);

struct ModalityRecall {
  Modality modality = Modality::Visual;
  std::size_t k_used = 0;
  std::vector<ScoredPage> hits;
  std::optional<GmmFit> gmm;
  bool fallback = false;
  std::string fallback_reason;
};

// Fits on the top fit_pool scores and keeps the top dynamic_k prefix. A
// degenerate or non-converged fit falls back to k_base. Throws EmptyCorpus.
ModalityRecall adaptive_recall(const ScoreVector& sv, const RecallConfig& cfg);

// Plain top-k_base.
ModalityRecall static_recall(const ScoreVector& sv, const RecallConfig& cfg);

}  // namespace mmrag
