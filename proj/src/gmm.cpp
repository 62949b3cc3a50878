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

#include "mmrag/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mmrag/error.hpp"

namespace mmrag {

namespace {

double log_normal(double x, double mu, double var) {
  const double d = x - mu;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

double log_weight(double w) {
  return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
}

struct Joint {
  double log_f;
  double log_t;
};

Joint joint(const GmmParams& p, double x) {
  return {log_weight(p.w_F) + log_normal(x, p.mu_F, p.var_F), log_weight(p.w_T) + log_normal(x, p.mu_T, p.var_T)};
}

double log_sum(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Linear interpolation between closest ranks; `sorted` ascending.
double percentile(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// E-step: fills resp with P(T | x) and returns the data log-likelihood.
double e_step(const GmmParams& p, std::span<const double> xs, std::vector<double>& resp) {
  double ll = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Joint j = joint(p, xs[i]);
    const double total = log_sum(j.log_f, j.log_t);
    resp[i] = std::exp(j.log_t - total);
    ll += total;
  }
  return ll;
}

GmmParams m_step(const GmmParams& prev, std::span<const double> xs, const std::vector<double>& resp, double floor) {
  double n_t = 0.0, sum_t = 0.0, sum_f = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    n_t += resp[i];
    sum_t += resp[i] * xs[i];
    sum_f += (1.0 - resp[i]) * xs[i];
  }
  const double n = static_cast<double>(xs.size());
  const double n_f = n - n_t;

  GmmParams next = prev;
  next.w_T = std::clamp(n_t / n, 0.0, 1.0);
  next.w_F = 1.0 - next.w_T;
  // An emptied component keeps its previous location.
  constexpr double kTiny = 1e-300;
  if (n_t > kTiny) next.mu_T = sum_t / n_t;
  if (n_f > kTiny) next.mu_F = sum_f / n_f;

  double ss_t = 0.0, ss_f = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dt = xs[i] - next.mu_T;
    const double df = xs[i] - next.mu_F;
    ss_t += resp[i] * dt * dt;
    ss_f += (1.0 - resp[i]) * df * df;
  }
  if (n_t > kTiny) next.var_T = std::max(ss_t / n_t, floor);
  if (n_f > kTiny) next.var_F = std::max(ss_f / n_f, floor);
  return next;
}

}  // namespace

RecallConfig RecallConfig::with_base(std::size_t k_base) {
  RecallConfig cfg;
  cfg.k_base = k_base;
  cfg.fit_pool = 2 * k_base;
  cfg.k_min = std::max<std::size_t>(1, k_base / 2);
  cfg.k_max = k_base;
  return cfg;
}

void RecallConfig::validate() const {
  if (k_base < 1) throw Error(ErrorCode::InvalidArgument, "k_base must be >= 1");
  if (!(1 <= k_min && k_min <= k_max && k_max <= fit_pool)) {
    throw Error(ErrorCode::InvalidArgument, "recall bounds must satisfy 1 <= k_min <= k_max <= fit_pool (got " +
                                                std::to_string(k_min) + ", " + std::to_string(k_max) + ", " +
                                                std::to_string(fit_pool) + ")");
  }
  if (!(em_tol > 0.0) || em_max_iter < 1 || !(variance_floor > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "em_tol, em_max_iter and variance_floor must be positive");
  }
}

double mixture_log_likelihood(const GmmParams& params, std::span<const double> scores) {
  double ll = 0.0;
  for (double x : scores) {
    const Joint j = joint(params, x);
    ll += log_sum(j.log_f, j.log_t);
  }
  return ll;
}

double responsibility_T(const GmmParams& params, double score) {
  const Joint j = joint(params, score);
  return std::exp(j.log_t - log_sum(j.log_f, j.log_t));
}

GmmFit fit_gmm(std::span<const double> scores, const RecallConfig& cfg, const EmObserver& observer) {
  if (scores.size() < 4) {
    throw Error(ErrorCode::DegenerateInput, "need at least 4 scores to fit, got " + std::to_string(scores.size()));
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::NonFinite, "non-finite similarity score");
  }
  // Sorted copy: the fit is then independent of input order.
  std::vector<double> xs(scores.begin(), scores.end());
  std::sort(xs.begin(), xs.end());
  if (xs.back() - xs.front() <= 1e-12) {
    throw Error(ErrorCode::DegenerateInput, "all scores are equal");
  }

  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n;

  GmmParams params;
  params.mu_F = percentile(xs, 0.25);
  params.mu_T = percentile(xs, 0.75);
  if (params.mu_T - params.mu_F <= 1e-12) {
    // Heavy ties can collapse the quartiles; spread to the extremes instead.
    params.mu_F = xs.front();
    params.mu_T = xs.back();
  }
  params.var_F = params.var_T = std::max(var / 4.0, cfg.variance_floor);

  GmmFit fit;
  std::vector<double> resp(xs.size());
  double ll = e_step(params, xs, resp);
  fit.log_likelihood_history.push_back(ll);
  if (observer) observer(0, params, ll);

  int it = 0;
  while (it < cfg.em_max_iter) {
    ++it;
    const GmmParams next = m_step(params, xs, resp, cfg.variance_floor);
    const double next_ll = e_step(next, xs, resp);
    fit.log_likelihood_history.push_back(next_ll);
    if (observer) observer(it, next, next_ll);
    const double gain = next_ll - ll;
    params = next;
    ll = next_ll;
    if (gain < cfg.em_tol) {
      fit.converged = true;
      break;
    }
  }

  if (params.mu_T < params.mu_F) {
    std::swap(params.mu_T, params.mu_F);
    std::swap(params.var_T, params.var_F);
    std::swap(params.w_T, params.w_F);
  }
  static_cast<GmmParams&>(fit) = params;
  fit.log_likelihood = ll;
  fit.iterations = it;
  return fit;
}

std::size_t raw_t_count(const GmmParams& params, const ScoreVector& sv, const RecallConfig& cfg) {
  const std::size_t pool = std::min(cfg.fit_pool, sv.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < pool; ++i) {
    // MAP membership; comparing joint log densities keeps exact ties on T.
    const Joint j = joint(params, sv.scores[i].score);
    if (j.log_t >= j.log_f) ++count;
  }
  return count;
}

std::size_t dynamic_k(const GmmFit& fit, const ScoreVector& sv, const RecallConfig& cfg) {
  return std::clamp(raw_t_count(fit, sv, cfg), cfg.k_min, cfg.k_max);
}

ModalityRecall adaptive_recall(const ScoreVector& sv, const RecallConfig& cfg) {
  cfg.validate();
  if (sv.empty()) throw Error(ErrorCode::EmptyCorpus, "no scores to recall from");
  ModalityRecall out;
  out.modality = sv.modality;

  const std::size_t pool = std::min(cfg.fit_pool, sv.size());
  std::vector<double> pool_scores;
  pool_scores.reserve(pool);
  for (std::size_t i = 0; i < pool; ++i) pool_scores.push_back(sv.scores[i].score);

  try {
    GmmFit fit = fit_gmm(pool_scores, cfg);
    if (fit.converged) {
      out.k_used = dynamic_k(fit, sv, cfg);
    } else {
      out.fallback = true;
      out.fallback_reason = "EM did not converge in " + std::to_string(fit.iterations) + " iterations";
    }
    out.gmm = std::move(fit);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateInput && e.code() != ErrorCode::NonFinite) throw;
    out.fallback = true;
    out.fallback_reason = e.what();
  }
  if (out.fallback) out.k_used = cfg.k_base;
  out.hits = top_k(sv, out.k_used);
  return out;
}

ModalityRecall static_recall(const ScoreVector& sv, const RecallConfig& cfg) {
  if (sv.empty()) throw Error(ErrorCode::EmptyCorpus, "no scores to recall from");
  ModalityRecall out;
  out.modality = sv.modality;
  out.k_used = cfg.k_base;
  out.hits = top_k(sv, cfg.k_base);
  return out;
}

}  // namespace mmrag
