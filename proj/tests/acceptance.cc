// Copyright 2026 the tabver authors
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

// Acceptance report: one PASS, FAIL or SKIP line per criterion. Exits
// non-zero when any criterion fails.
//
// The TabFact criteria run only when TABVER_TABFACT_DIR names a directory
// holding tables.jsonl and dev.jsonl (plus optional train, test, simple,
// complex and small claim files) in the tabver JSON Lines format.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "tabver/ablation.h"
#include "tabver/detector.h"
#include "tabver/encoder.h"
#include "tabver/fusion.h"
#include "tabver/heads.h"
#include "tabver/metrics.h"
#include "tabver/synthetic.h"
#include "tabver/trainer.h"

namespace fs = std::filesystem;
using namespace tabver;

namespace {

// Tolerances and budgets.
constexpr double kRetrievalPoints = 1.0;      // absolute Hits@k points
constexpr double kRetrievalMinutes = 30.0;
constexpr double kOracleTolerance = 1e-9;
constexpr int kOracleTrials = 1000;
constexpr double kOracleSeconds = 60.0;
constexpr double kGradEps = 1e-4;
constexpr double kGradTolerance = 1e-4;
constexpr std::uint64_t kGradSeeds = 10;
constexpr double kGradSeconds = 60.0;
constexpr double kMassTolerance = 1e-9;
constexpr int kInvariantDraws = 1000;
constexpr double kTranscriptionTolerance = 1e-9;
constexpr int kTranscriptionInstances = 1000;
constexpr double kHeldOutAccuracy = 0.90;
constexpr double kSyntheticMinutes = 10.0;
constexpr double kDetectorRecallFrom = 0.50;
constexpr double kDetectorRecallTo = 0.95;
constexpr double kDetectorRecallStep = 0.05;

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::skip;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::fail, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Status::pass : Status::fail, std::move(d)}; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------- TabFact

std::optional<fs::path> tabfact_dir() {
  const char* dir = std::getenv("TABVER_TABFACT_DIR");
  if (!dir || !*dir) return std::nullopt;
  return fs::path(dir);
}

double hits_points(const CellIndex& index, const std::vector<Claim>& claims, std::size_t k) {
  const auto rankings = index.retrieve_all(claims, k);
  const std::vector<std::size_t> ks{k};
  return 100.0 * hits_at_k(claims, rankings, ks).at(k);
}

std::vector<Claim> claims_with_gold(const fs::path& p) {
  std::vector<Claim> all = load_claims(p);
  std::erase_if(all, [](const Claim& c) { return !c.gold_table_id; });
  return all;
}

Outcome retrieval_reproduction() {
  const auto dir = tabfact_dir();
  if (!dir) return {Status::skip, "TABVER_TABFACT_DIR is not set"};
  const auto t0 = std::chrono::steady_clock::now();
  const Corpus corpus = load_tables(*dir / "tables.jsonl");
  const CellIndex index = CellIndex::build(corpus, *strategy_preset("entity_char23"));
  const std::vector<Claim> dev = claims_with_gold(*dir / "dev.jsonl");
  const auto rankings = index.retrieve_all(dev, 10);
  const double minutes = seconds_since(t0) / 60.0;

  bool ok = minutes < kRetrievalMinutes;
  std::ostringstream d;
  const std::vector<std::size_t> ks{1, 3, 5, 10};
  const auto hits = hits_at_k(dev, rankings, ks);
  const std::map<std::size_t, double> expected{{1, 69.6}, {3, 78.8}, {5, 82.3}, {10, 86.6}};
  for (const auto& [k, want] : expected) {
    const double got = 100.0 * hits.at(k);
    ok = ok && std::abs(got - want) <= kRetrievalPoints;
    d << "dev H@" << k << " " << fmt(got, 1) << " (" << want << ") ";
  }
  const std::map<std::string, double> splits{
      {"train", 59.5}, {"test", 69.7}, {"simple", 92.7}, {"complex", 64.7}, {"small", 82.1}};
  for (const auto& [name, want] : splits) {
    const fs::path file = *dir / (name + ".jsonl");
    if (!fs::exists(file)) {
      ok = false;
      d << name << " missing ";
      continue;
    }
    const double got = hits_points(index, claims_with_gold(file), 1);
    ok = ok && std::abs(got - want) <= kRetrievalPoints;
    d << name << " H@1 " << fmt(got, 1) << " (" << want << ") ";
  }
  d << "in " << fmt(minutes, 1) << " min";
  return verdict(ok, d.str());
}

Outcome baseline_ordering() {
  const auto dir = tabfact_dir();
  if (!dir) return {Status::skip, "TABVER_TABFACT_DIR is not set"};
  const Corpus corpus = load_tables(*dir / "tables.jsonl");
  const std::vector<Claim> dev = claims_with_gold(*dir / "dev.jsonl");
  const char* order[] = {"entity_char23", "entity_char123", "entity_word",
                         "entity_exact",  "query_word",     "query_char23"};
  std::ostringstream d;
  bool ok = true;
  double prev = 1e9;
  for (const char* name : order) {
    const CellIndex index = CellIndex::build(corpus, *strategy_preset(name));
    const double h1 = hits_points(index, dev, 1);
    ok = ok && h1 < prev;
    prev = h1;
    d << name << " " << fmt(h1, 1) << " ";
  }
  return verdict(ok, d.str());
}

// ------------------------------------------------------- property suites

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto presets = strategy_preset_names();
  Rng rng(20260);
  double worst = 0.0;
  std::size_t compared = 0;
  for (int trial = 0; trial < kOracleTrials; ++trial) {
    const auto world = oracle::random_world(rng, 50, 25, 3);
    const IndexConfig cfg = *strategy_preset(presets[trial % presets.size()]);
    const CellIndex index = CellIndex::build(world.corpus, cfg, 1);
    for (const Claim& claim : world.claims) {
      const auto naive = oracle::naive_scores(world.corpus, claim, cfg);
      for (const ScoredTable& s : index.retrieve_topk(claim, world.corpus.size())) {
        worst = std::max(worst, std::abs(s.score - naive.at(s.table_id).score));
        ++compared;
      }
    }
  }
  const double secs = seconds_since(t0);
  return verdict(worst <= kOracleTolerance && secs < kOracleSeconds,
                 std::to_string(kOracleTrials) + " trials, " + std::to_string(compared) +
                     " scores, max deviation " + sci(worst) + ", " + fmt(secs, 1) + " s");
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double bound) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

double encoder_check(std::uint64_t seed) {
  Rng rng(seed);
  EncoderConfig c;
  c.hash_buckets = 16;
  c.embed_dim = 5;
  c.hidden_dim = 6;
  c.output_dim = 4;
  c.dropout = 0.0;
  EncoderParams p = EncoderParams::init(c, rng);
  std::vector<TensorRef> params;
  p.append_tensors(params);
  oracle::randomize(params, 0.8, rng);
  std::vector<double> up(4);
  for (double& u : up) u = rng.uniform(-1.0, 1.0);
  Linearisation lin;
  lin.text = "claim </s> row 1 is : name is item" + std::to_string(seed) + " .";
  const FeatureBag bag = featurize(lin.text, c);
  EncoderParams g = encode_grad(lin, p, up);
  std::vector<TensorRef> analytic;
  g.append_tensors(analytic);
  auto objective = [&] {
    const EncodedTable e = encode(bag, p);
    double s = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) s += up[i] * e.vector[i];
    return s;
  };
  return oracle::check_gradients(objective, params, analytic, kGradEps).max_rel_error;
}

double fusion_check(std::uint64_t seed) {
  Rng rng(seed * 7 + 1);
  const std::size_t k = 1 + seed % 4;
  FusionParams p = FusionParams::init(4, 1 + seed % 2, rng);
  std::vector<TensorRef> params;
  p.append_tensors(params);
  oracle::randomize(params, 1.0, rng);
  Matrix f = random_matrix(k, 4, rng, 1.5);
  const Matrix up = random_matrix(k, 8, rng, 1.0);
  FusionGradients g = fuse_grad(f, p, up);
  params.push_back({"encodings", f.values()});
  std::vector<TensorRef> analytic;
  g.params.append_tensors(analytic);
  analytic.push_back({"encodings", g.encodings.values()});
  auto objective = [&] {
    const FusedBatch out = fuse(f, p);
    double s = 0.0;
    for (std::size_t i = 0; i < out.fused.size(); ++i) s += out.fused.values()[i] * up.values()[i];
    return s;
  };
  return oracle::check_gradients(objective, params, analytic, kGradEps).max_rel_error;
}

double head_check(std::uint64_t seed, bool ternary) {
  Rng rng(seed * 13 + 5);
  const std::size_t k = 1 + seed % 4;
  MlpParams mlp = MlpParams::init(6, 5, ternary ? 3 : 2, rng);
  std::vector<TensorRef> params;
  mlp.append_tensors("head", params);
  oracle::randomize(params, 0.9, rng);
  Matrix fused = random_matrix(k, 6, rng, 1.5);
  const std::size_t gold = rng.index(k);
  const bool v = rng.uniform() < 0.5;
  auto loss_of = [&](const Matrix& logits) {
    return ternary ? ternary_loss(ternary_from_logits(logits), gold, v)
                   : joint_loss(joint_from_logits(logits), gold, v);
  };
  auto objective = [&] {
    HeadTrace t;
    head_forward(fused, mlp, nullptr, t);
    return loss_of(t.logits);
  };
  HeadTrace t;
  head_forward(fused, mlp, nullptr, t);
  const Matrix grad_logits = ternary ? ternary_loss_grad(ternary_from_logits(t.logits), gold, v)
                                     : joint_loss_grad(joint_from_logits(t.logits), gold, v);
  MlpParams g = mlp.zeros_like();
  Matrix grad_fused(k, 6);
  head_backward(t, mlp, grad_logits, g, grad_fused);
  params.push_back({"fused", fused.values()});
  std::vector<TensorRef> analytic;
  g.append_tensors("head", analytic);
  analytic.push_back({"fused", grad_fused.values()});
  return oracle::check_gradients(objective, params, analytic, kGradEps).max_rel_error;
}

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, double> worst;
  for (std::uint64_t seed = 1; seed <= kGradSeeds; ++seed) {
    worst["encoder"] = std::max(worst["encoder"], encoder_check(seed));
    worst["fusion"] = std::max(worst["fusion"], fusion_check(seed));
    worst["joint"] = std::max(worst["joint"], head_check(seed, false));
    worst["ternary"] = std::max(worst["ternary"], head_check(seed, true));
  }
  const double secs = seconds_since(t0);
  bool ok = secs < kGradSeconds;
  std::ostringstream d;
  d << kGradSeeds << " seeds each;";
  for (const auto& [name, err] : worst) {
    ok = ok && err < kGradTolerance;
    d << " " << name << " " << sci(err);
  }
  d << "; " << fmt(secs, 1) << " s";
  return verdict(ok, d.str());
}

Outcome distribution_invariants() {
  Rng rng(99);
  double worst = 0.0;
  for (int draw = 0; draw < kInvariantDraws; ++draw) {
    const std::size_t k = 1 + rng.index(6);
    const std::size_t n = 4 * (1 + rng.index(2));
    FusionParams fp = FusionParams::init(n, 1 + rng.index(2), rng);
    HeadParams hp = HeadParams::init(2 * n, 6, rng);
    std::vector<TensorRef> tensors;
    fp.append_tensors(tensors);
    hp.append_tensors(tensors);
    oracle::randomize(tensors, 2.0, rng);
    const FusedBatch fused = fuse(random_matrix(k, n, rng, 3.0), fp);

    for (const Matrix& a : fused.attention) {
      for (std::size_t i = 0; i < k; ++i) {
        double s = 0.0;
        for (double v : a.row(i)) {
          if (v < 0.0) worst = std::max(worst, 1.0);
          s += v;
        }
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
    const JointDistribution joint = joint_forward(fused, hp);
    double mass = 0.0;
    for (double v : joint.probs.values()) mass += v;
    worst = std::max(worst, std::abs(mass - 1.0));
    const auto [pt, pf] = marginal_verdict(joint);
    worst = std::max(worst, std::abs(pt + pf - 1.0));
    double ps = 0.0;
    for (double v : marginal_rerank(joint)) ps += v;
    worst = std::max(worst, std::abs(ps - 1.0));

    const TernaryDistribution tern = ternary_forward(fused, hp);
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (double v : tern.probs.row(i)) s += v;
      worst = std::max(worst, std::abs(s - 1.0));
    }
  }
  return verdict(worst <= kMassTolerance, std::to_string(kInvariantDraws) +
                                              " draws, max deviation " + sci(worst));
}

Outcome formula_transcription() {
  Rng rng(606);
  double worst = 0.0;
  for (int i = 0; i < kTranscriptionInstances; ++i) {
    FusionParams p = FusionParams::init(4, 1 + i % 2, rng);
    std::vector<TensorRef> tensors;
    p.append_tensors(tensors);
    oracle::randomize(tensors, 1.5, rng);
    const Matrix f = random_matrix(3, 4, rng, 2.0);
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < 3; ++r) rows.emplace_back(f.row(r).begin(), f.row(r).end());
    const FusedBatch out = fuse(f, p);
    const oracle::DenseFusion ref = oracle::dense_fuse(rows, p);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 8; ++c) {
        worst = std::max(worst, std::abs(out.fused(r, c) - ref.fused[r][c]));
      }
    }
    for (std::size_t h = 0; h < out.attention.size(); ++h) {
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
          worst = std::max(worst, std::abs(out.attention[h](r, c) - ref.alpha[h][r][c]));
        }
      }
    }
  }
  return verdict(worst <= kTranscriptionTolerance,
                 std::to_string(kTranscriptionInstances) + " instances (k=3, n=4), max deviation " +
                     sci(worst));
}

// ------------------------------------------------------ synthetic suite

// Desk configuration for the synthetic world: default widths, 4096 feature
// buckets, no dropout, 200 epochs of batch 8 at peak rate 2e-3.
ModelConfig synthetic_model() {
  ModelConfig m;
  m.encoder.hash_buckets = 4096;
  m.encoder.dropout = 0.0;
  return m;
}

TrainConfig synthetic_train(std::size_t k) {
  TrainConfig t;
  t.learning_rate = 2e-3;
  t.batch_size = 8;
  t.epochs = 200;
  t.k = k;
  return t;
}

struct SyntheticSuite {
  SyntheticData data = make_synthetic(SyntheticConfig{});
  CellIndex index = CellIndex::build(data.corpus, IndexConfig{});
};

struct AblationRun {
  std::vector<AblationResult> results;
  double minutes = 0.0;
};

const AblationResult* find_variant(const AblationRun& run, const std::string& name) {
  for (const AblationResult& r : run.results) {
    if (r.variant.name == name) return &r;
  }
  return nullptr;
}

Outcome synthetic_end_to_end(const AblationRun& run) {
  const AblationResult* full = find_variant(run, "full");
  if (!full) return fail("full variant missing");
  const MetricsReport& r = full->report;
  const double raw = r.hits_at.at(1);
  const double reranked = r.rerank_hits_at.at(1);
  // Four variants were trained; the full one is a quarter of the budget.
  const bool ok = r.accuracy > kHeldOutAccuracy && reranked > raw &&
                  run.minutes / 4.0 < kSyntheticMinutes;
  return verdict(ok, "held-out accuracy " + fmt(r.accuracy, 3) + ", reranked H@1 " +
                         fmt(reranked, 3) + " vs raw H@1 " + fmt(raw, 3) + ", all variants in " +
                         fmt(run.minutes, 1) + " min");
}

Outcome ablation_directionality(const AblationRun& run) {
  const AblationResult* full = find_variant(run, "full");
  const AblationResult* no_attn = find_variant(run, "no_attention");
  const AblationResult* no_joint = find_variant(run, "no_joint_objective");
  const AblationResult* neither = find_variant(run, "neither");
  if (!full || !no_attn || !no_joint || !neither || run.results.size() != 4) {
    return fail("expected exactly four variants");
  }
  const double a = full->report.accuracy, b = no_attn->report.accuracy,
               c = no_joint->report.accuracy, d = neither->report.accuracy;
  return verdict(a >= b && b >= d && a >= c,
                 "full " + fmt(a, 3) + ", no_attention " + fmt(b, 3) + ", no_joint_objective " +
                     fmt(c, 3) + ", neither " + fmt(d, 3));
}

Outcome detector_dominance(const SyntheticSuite& s, std::uint64_t& eval_injections) {
  // k = 2 leaves the gold table out for a sizeable share of claims.
  constexpr std::size_t k = 2;
  ModelConfig model = synthetic_model();
  model.head = HeadKind::ternary;
  const TrainOutcome trained = train(s.data.train, s.data.corpus, s.index, model, synthetic_train(k));
  EvalOptions options;
  options.k = k;
  reset_gold_injection_count();
  const Evaluation ev =
      evaluate_checkpoint(trained.checkpoint.params, s.data.test, s.data.corpus, s.index, options);
  eval_injections = gold_injection_count();
  const auto scores =
      suitability_scores(ev, SuitabilityMethod::ternary_max_relevance, s.data.test);
  const PrCurve curve = pr_curve(scores);
  bool ok = true;
  double margin = 1.0;
  for (double r = kDetectorRecallFrom; r <= kDetectorRecallTo + 1e-12; r += kDetectorRecallStep) {
    const double p = curve.interpolated_precision(r);
    margin = std::min(margin, p - curve.baseline_precision);
    ok = ok && p > curve.baseline_precision;
  }
  return verdict(ok, "baseline precision " + fmt(curve.baseline_precision, 3) +
                         ", precision at recall 0.50 " + fmt(curve.interpolated_precision(0.5), 3) +
                         ", smallest margin over recall " + fmt(kDetectorRecallFrom, 2) + "-" +
                         fmt(kDetectorRecallTo, 2) + " is " + fmt(margin, 3));
}

Outcome gold_injection(std::uint64_t eval_injections) {
  std::vector<std::string> failures;
  auto ranked = [](std::initializer_list<const char*> ids) {
    std::vector<ScoredTable> out;
    double s = 5.0;
    for (const char* id : ids) out.push_back({id, s--, {}});
    return out;
  };
  if (inject_gold(ranked({"g", "a", "b", "c", "d"}), "g", Mode::training) !=
      std::vector<std::string>{"g", "a", "b", "c", "d"}) {
    failures.push_back("rank-1 gold changed");
  }
  if (inject_gold(ranked({"a", "b", "c", "d", "e"}), "g", Mode::training) !=
      std::vector<std::string>{"a", "b", "c", "d", "g"}) {
    failures.push_back("absent gold not placed at position k");
  }
  if (inject_gold(ranked({"a"}), "g", Mode::training) != std::vector<std::string>{"g"}) {
    failures.push_back("k=1 replacement");
  }
  bool guarded = false;
  try {
    inject_gold(ranked({"a"}), "g", Mode::evaluation);
  } catch (const std::logic_error&) {
    guarded = true;
  }
  if (!guarded) failures.push_back("evaluation-mode call not rejected");
  reset_gold_injection_count();
  inject_gold(ranked({"a"}), "g", Mode::training);
  if (gold_injection_count() != 1) failures.push_back("counter not counting");
  if (eval_injections != 0) failures.push_back("injections during evaluation");
  std::string detail = "3 examples, evaluation injections " + std::to_string(eval_injections);
  for (const std::string& f : failures) detail += "; " + f;
  return verdict(failures.empty(), detail);
}

const char* label(Status s) {
  switch (s) {
    case Status::pass:
      return "PASS";
    case Status::fail:
      return "FAIL";
    case Status::skip:
      return "SKIP";
  }
  return "?";
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return fail(std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  bool failed = false;
  auto report = [&](int n, const char* name, const Outcome& o) {
    std::printf("criterion %d %s %s: %s\n", n, label(o.status), name, o.detail.c_str());
    std::fflush(stdout);
    failed = failed || o.status == Status::fail;
  };

  report(1, "retrieval reproduction", guarded(retrieval_reproduction));
  report(2, "baseline ordering", guarded(baseline_ordering));
  report(3, "brute-force oracle equivalence", guarded(oracle_equivalence));
  report(4, "gradient suite", guarded(gradient_suite));
  report(5, "distribution invariants", guarded(distribution_invariants));
  report(6, "formula transcription", guarded(formula_transcription));

  const SyntheticSuite suite;
  AblationRun run;
  const Outcome ablation_error = guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    run.results = ablate(suite.data.train, suite.data.test, suite.data.corpus, suite.index,
                         synthetic_model(), synthetic_train(3));
    run.minutes = seconds_since(t0) / 60.0;
    return pass("");
  });
  if (ablation_error.status == Status::fail) {
    report(7, "synthetic end-to-end", ablation_error);
    report(8, "ablation directionality", ablation_error);
  } else {
    report(7, "synthetic end-to-end", guarded([&] { return synthetic_end_to_end(run); }));
    report(8, "ablation directionality", guarded([&] { return ablation_directionality(run); }));
  }

  std::uint64_t eval_injections = 1;
  report(9, "detector dominance", guarded([&] { return detector_dominance(suite, eval_injections); }));
  report(10, "gold injection", guarded([&] { return gold_injection(eval_injections); }));
  return failed ? 1 : 0;
}
