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

// Runs every primary acceptance check and prints one PASS/FAIL/SKIP line each.
// Usage: acceptance <path-to-mmrag-binary>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "golden_cases.hpp"
#include "mmrag/engine.hpp"
#include "mmrag/error.hpp"
#include "mmrag/eval.hpp"
#include "mmrag/gmm.hpp"
#include "mmrag/hybrid.hpp"
#include "mmrag/scripted.hpp"
#include "mmrag/workflow.hpp"
#include "synthetic.hpp"
#include "testing.hpp"

namespace mmrag::acceptance {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Outcome {
  enum class Status { Pass, Fail, Skip } status = Status::Pass;
  std::string detail;
};

Outcome pass(std::string detail) { return {Outcome::Status::Pass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Outcome::Status::Fail, std::move(detail)}; }

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << x;
  return s.str();
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome gmm_recovery() {
  std::mt19937_64 rng(20260427);
  std::bernoulli_distribution high(0.1);
  std::normal_distribution<double> lo(0.30, 0.05), hi(0.80, 0.05);
  std::vector<double> xs(2000);
  for (double& x : xs) x = high(rng) ? hi(rng) : lo(rng);

  std::vector<double> lls;
  const auto t0 = Clock::now();
  const GmmFit fit = fit_gmm(xs, RecallConfig{}, [&](int, const GmmParams&, double ll) { lls.push_back(ll); });
  const double secs = seconds_since(t0);
  std::string detail = "mu=(" + fmt(fit.mu_F) + ", " + fmt(fit.mu_T) + ") w=(" + fmt(fit.w_F) + ", " +
                       fmt(fit.w_T) + ") iters=" + std::to_string(fit.iterations) + " " + fmt(secs * 1000, 1) +
                       " ms";
  if (std::abs(fit.mu_F - 0.30) > 0.02 || std::abs(fit.mu_T - 0.80) > 0.02) return fail("means off: " + detail);
  if (std::abs(fit.w_F - 0.9) > 0.05 || std::abs(fit.w_T - 0.1) > 0.05) return fail("weights off: " + detail);
  for (std::size_t i = 1; i < lls.size(); ++i) {
    if (lls[i] < lls[i - 1] - 1e-9 * std::abs(lls[i - 1])) {
      return fail("log-likelihood decreased at iteration " + std::to_string(i));
    }
  }
  if (secs >= 1.0) return fail("too slow: " + detail);
  return pass(detail);
}

Outcome dynamic_k_clamp() {
  std::mt19937_64 rng(1000);
  const RecallConfig cfg;
  std::size_t lo = cfg.k_max, hi = 0, fallbacks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = cfg.fit_pool + rng() % 80;
    ScoreVector sv;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> cluster(0.7, 0.05 + 0.1 * (trial % 3));
    const std::size_t cut = rng() % n;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      switch (trial % 4) {
        case 0: s = u(rng); break;
        case 1: s = i < cut ? cluster(rng) : 0.5 * u(rng); break;
        case 2: s = 0.25; break;
        default: s = std::round(u(rng) * 4) / 4;
      }
      sv.scores.push_back({"p" + std::to_string(i), s});
    }
    std::stable_sort(sv.scores.begin(), sv.scores.end(),
                     [](const ScoredPage& a, const ScoredPage& b) { return a.score > b.score; });
    const ModalityRecall r = adaptive_recall(sv, cfg);
    if (r.k_used < cfg.k_min || r.k_used > cfg.k_max) {
      return fail("trial " + std::to_string(trial) + " gave K=" + std::to_string(r.k_used));
    }
    if (r.hits.size() != r.k_used) return fail("hits/K mismatch at trial " + std::to_string(trial));
    lo = std::min(lo, r.k_used);
    hi = std::max(hi, r.k_used);
    fallbacks += r.fallback ? 1 : 0;
  }
  return pass("1000 vectors, K in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], " +
              std::to_string(fallbacks) + " fallbacks");
}

Outcome context_reduction() {
  std::mt19937_64 rng(500);
  const RecallConfig cfg;
  double pages = 0.0, truth = 0.0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    const testing::BimodalSet set = testing::bimodal_set(rng, 1, 30, 64);
    const QueryRecord& q = set.queries[0];
    const RetrievalResult r =
        retrieve(q.uid, sidecar_query_vectors(*set.corpus, q.uid), *set.corpus, cfg, RetrievalMode::Dynamic);
    pages += static_cast<double>(r.merged.size());
    truth += static_cast<double>(set.cluster_sizes[0]);
  }
  pages /= n;
  truth /= n;
  const std::string detail = "mean pages " + fmt(pages, 3) + " vs static 10, true cluster mean " + fmt(truth, 3);
  if (pages >= 10.0) return fail(detail);
  if (std::abs(pages - truth) > 1.5) return fail(detail);
  return pass(detail);
}

Outcome merge_algebra() {
  const CorpusHandle c = testing::synthetic_corpus(3, 8, 4, 0, 2);
  std::mt19937_64 rng(4);
  auto random_hits = [&] {
    std::vector<ScoredPage> out;
    for (const PageRecord& p : c->pages()) {
      if (rng() % 3 == 0) out.push_back({p.page_id, 0.0});
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
  };
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_hits(), b = random_hits();
    const auto ab = merge(a, b, *c);
    if (ab != merge(b, a, *c)) return fail("not commutative");
    const auto aa = merge(a, a, *c);
    if (merge(a, {}, *c) != aa) return fail("not idempotent");
    const std::set<std::string> m(ab.begin(), ab.end());
    if (m.size() != ab.size()) return fail("duplicates in merge");
    std::set<std::string> u;
    for (const auto& h : a) u.insert(h.page_id);
    for (const auto& h : b) u.insert(h.page_id);
    if (u != m) return fail("merge is not the union");
    for (std::size_t i = 1; i < ab.size(); ++i) {
      if (c->rank(ab[i - 1]) >= c->rank(ab[i])) return fail("merge not in canonical order");
    }
  }
  const CorpusHandle big = testing::synthetic_corpus(4, 10, 16, 8, 7);
  const RecallConfig cfg;
  std::size_t largest = 0;
  for (int trial = 0; trial < 300; ++trial) {
    QueryVectors q;
    q.visual = testing::random_vector(rng, 16);
    q.textual = testing::random_vector(rng, 8);
    const RetrievalResult r = retrieve("q", q, *big, cfg, RetrievalMode::DynamicHybrid);
    if (r.merged.size() > 2 * cfg.k_max) return fail("dynamic_hybrid merged " + std::to_string(r.merged.size()));
    largest = std::max(largest, r.merged.size());
  }
  return pass("500 random pairs; dynamic_hybrid max |merged| " + std::to_string(largest) + " <= " +
              std::to_string(2 * cfg.k_max));
}

Outcome metric_oracles() {
  std::mt19937_64 rng(200);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> universe;
    for (int i = 0; i < 20; ++i) universe.push_back("p" + std::to_string(i));
    std::shuffle(universe.begin(), universe.end(), rng);
    const std::vector<std::string> retrieved(universe.begin(), universe.begin() + static_cast<long>(rng() % 15));
    std::shuffle(universe.begin(), universe.end(), rng);
    const std::size_t g = trial % 2 == 0 ? 1 : 1 + rng() % 4;
    const std::vector<std::string> golden(universe.begin(), universe.begin() + static_cast<long>(g));
    double prev = 0.0;
    for (std::size_t k = 1; k <= 15; ++k) {
      std::size_t hits = 0;
      double rr = 0.0;
      for (std::size_t i = 0; i < std::min(k, retrieved.size()); ++i) {
        const bool hit = std::find(golden.begin(), golden.end(), retrieved[i]) != golden.end();
        hits += hit ? 1 : 0;
        if (hit && rr == 0.0) rr = 1.0 / static_cast<double>(i + 1);
      }
      const double recall = recall_at_k(retrieved, golden, k);
      const double mrr = mrr_at_k(retrieved, golden, k);
      if (recall != static_cast<double>(hits) / static_cast<double>(g)) return fail("recall mismatch");
      if (mrr != rr) return fail("mrr mismatch");
      if (recall < prev) return fail("recall decreased with K");
      prev = recall;
      if (g == 1 && (mrr > 0.0) != (recall == 1.0)) return fail("biconditional broken");
    }
  }
  return pass("200 instances x K=1..15 match the oracles");
}

Outcome golden_traces() {
  const auto& cases = testing::golden_cases();
  std::size_t matched = 0;
  for (const testing::GoldenCase& c : cases) {
    const testing::GoldenRun run = testing::run_golden(c);
    if (run.trace != run.expected) return fail(c.name + ": trace differs from the frozen golden");
    if (const std::string v = testing::candidate_violation(run.result.trace, testing::golden_pages(c.pages));
        !v.empty()) {
      return fail(c.name + ": " + v);
    }
    if (const std::string v = trace_schema_violation(run.result.trace); !v.empty()) return fail(c.name + ": " + v);
    if (run.result.termination != c.termination || run.result.rounds != c.rounds) {
      return fail(c.name + ": termination/rounds differ");
    }
    ++matched;
  }
  if (matched < 6) return fail("only " + std::to_string(matched) + " transcripts");
  return pass(std::to_string(matched) + " transcripts reproduce their traces byte-for-byte");
}

Outcome consistency_check() {
  auto run = [](std::vector<int> refs) {
    const json seeker{{"reason", "r"}, {"summary", "s"}, {"choice", {0, 1, 2}}};
    const json inspector{{"reason", "r"}, {"answer", "a"}, {"reference", refs}};
    const json answer{{"reason", "r"}, {"answer", "b"}, {"reference", {0}}};
    ScriptedBackend backend(ScriptedTranscript({testing::reply("seeker", 0, seeker),
                                                testing::reply("inspector", 0, inspector),
                                                testing::reply("answer", 0, answer)}));
    const WorkflowResult r = run_workflow("consistency", "q", testing::golden_pages(3), backend, WorkflowLimits{});
    return testing::count_calls(r.trace, "answer_call");
  };
  const int equal = run({0, 1, 2});
  const int subset = run({1});
  const std::string detail = "equal set -> " + std::to_string(equal) + " calls, proper subset -> " +
                             std::to_string(subset) + " call";
  if (equal != 0 || subset != 1) return fail(detail);
  for (const auto& c : testing::golden_cases()) {
    const testing::GoldenRun g = testing::run_golden(c);
    if (testing::count_calls(g.result.trace, "answer_call") != c.answer_calls) return fail(c.name + " answer calls");
  }
  return pass(detail);
}

Outcome judge_threshold() {
  std::string mapping;
  for (int s = 1; s <= 5; ++s) {
    ScriptedBackend judge(ScriptedTranscript({testing::reply("judge", 0, json{{"score", s}})}));
    const JudgeVerdict v = judge_accuracy("answer", "reference", "question", judge);
    if (v.score != s) return fail("score " + std::to_string(s) + " read as " + std::to_string(v.score));
    if (v.correct != (s >= 4)) return fail("score " + std::to_string(s) + " mapped wrongly");
    mapping += v.correct ? 'T' : 'F';
  }
  return pass("1..5 -> " + mapping);
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

Outcome end_to_end(const std::string& mmrag) {
  if (mmrag.empty()) return fail("no mmrag binary given");
  testing::TempDir dir;
  const auto smoke = testing::smoke_dir();
  const std::string index = (dir / "index").string();
  auto sh = [&](const std::string& args, const std::string& log) {
    return std::system((quote(mmrag) + " " + args + " > " + quote((dir / log).string()) + " 2>&1").c_str());
  };
  const std::string eval_args = "eval --index " + quote(index) + " --scripted " +
                                quote((smoke / "generation.jsonl").string()) + " --scripted-judge " +
                                quote((smoke / "judge.jsonl").string()) + " --grid all --out ";
  const auto t0 = Clock::now();
  if (sh("ingest --manifest " + quote((smoke / "manifest.json").string()) + " --index " + quote(index),
         "ingest.log") != 0) {
    return fail("ingest failed: " + testing::read_file(dir / "ingest.log"));
  }
  if (sh(eval_args + quote((dir / "a").string()), "eval-a.log") != 0) {
    return fail("eval failed: " + testing::read_file(dir / "eval-a.log"));
  }
  const double secs = seconds_since(t0);
  if (sh(eval_args + quote((dir / "b").string()), "eval-b.log") != 0) return fail("second eval failed");

  for (const char* f : {"report.json", "report.csv"}) {
    if (testing::read_file(dir / "a" / f) != testing::read_file(dir / "b" / f)) {
      return fail(std::string(f) + " differs between runs");
    }
  }
  const json report = json::parse(testing::read_file(dir / "a" / "report.json"));
  if (report.at("cells").size() != 8) return fail("expected 8 grid cells");
  for (const json& cell : report.at("cells")) {
    if (cell.at("retrieval") != "dynamic_hybrid" || cell.at("generation") != "multi-agent") continue;
    const json& agg = cell.at("aggregates");
    const std::string detail = "8 cells in " + fmt(secs, 2) + " s, dynamic_hybrid+multi-agent " +
                               std::to_string(agg.at("correct").get<int>()) + "/" +
                               std::to_string(agg.at("queries").get<int>()) + " correct, reports identical";
    if (agg.at("queries") != 3 || agg.at("correct") != 3) return fail(detail);
    if (secs >= 10.0) return fail(detail);
    return pass(detail);
  }
  return fail("dynamic_hybrid+multi-agent cell missing");
}

Outcome live_backend() {
  const char* path = std::getenv("MMRAG_LIVE_CONFIG");
  if (!path || !*path) return {Outcome::Status::Skip, "set MMRAG_LIVE_CONFIG to a config naming a live backend"};
  auto engine = Engine::open(EngineConfig::load(path));
  if (engine->corpus().queries().empty()) return fail("the configured index has no queries");
  const char* uid = std::getenv("MMRAG_LIVE_UID");
  const std::string chosen = uid && *uid ? uid : engine->corpus().queries().front().uid;
  const WorkflowResult r = engine->ask(QueryInput{chosen, "", {}}, RetrievalMode::DynamicHybrid);
  if (r.termination == Termination::Aborted) return fail(chosen + " aborted: " + r.error);
  if (const std::string v = trace_schema_violation(r.trace); !v.empty()) return fail("trace: " + v);
  return pass(chosen + " -> \"" + r.answer + "\" (" + std::string(to_string(r.termination)) + ", " +
              std::to_string(r.trace.events().size()) + " trace events)");
}

}  // namespace
}  // namespace mmrag::acceptance

int main(int argc, char** argv) {
  using namespace mmrag::acceptance;
  const std::string mmrag = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"gmm-em-recovery", gmm_recovery},
      {"dynamic-k-clamp", dynamic_k_clamp},
      {"context-reduction-direction", context_reduction},
      {"hybrid-merge-algebra", merge_algebra},
      {"metric-oracle-equivalence", metric_oracles},
      {"state-machine-conformance", golden_traces},
      {"consistency-check-rule", consistency_check},
      {"judge-threshold", judge_threshold},
      {"end-to-end-smoke", [&] { return end_to_end(mmrag); }},
      {"live-backend", live_backend},
  };
  int failures = 0;
  for (const auto& [name, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Outcome::Status::Pass ? "PASS" : o.status == Outcome::Status::Fail ? "FAIL" : "SKIP";
    if (o.status == Outcome::Status::Fail) ++failures;
    std::cout << tag << " " << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
