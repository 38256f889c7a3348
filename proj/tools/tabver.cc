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

// tabver: command-line driver for retrieval, training, evaluation,
// insufficient-evidence detection and ablations over table corpora.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_support.h"
#include "tabver/ablation.h"
#include "tabver/config.h"
#include "tabver/corpus.h"
#include "tabver/detector.h"
#include "tabver/errors.h"
#include "tabver/linearizer.h"
#include "tabver/metrics.h"
#include "tabver/retriever.h"
#include "tabver/synthetic.h"
#include "tabver/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tabver::cli {
namespace {

// ---------------------------------------------------------------------------
// Input resolution

fs::path output_dir(const RunConfig& cfg) { return cfg.path("output_dir").value_or("out"); }

fs::path index_path(const RunConfig& cfg) {
  return cfg.path("index").value_or(output_dir(cfg) / "index.bin");
}

fs::path checkpoint_path(const RunConfig& cfg) {
  return cfg.path("checkpoint").value_or(output_dir(cfg) / "model.ckpt");
}

fs::path require_file(const fs::path& p, std::string_view what) {
  if (!fs::is_regular_file(p)) {
    throw InputError(std::string(what) + " not found: " + p.string());
  }
  return p;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

Corpus read_corpus(const RunConfig& cfg) { return load_tables(cfg.existing_path("tables")); }

std::vector<Claim> read_claims(const RunConfig& cfg, std::string_view key) {
  return load_claims(cfg.existing_path(key));
}

std::vector<Claim> read_optional_claims(const RunConfig& cfg, std::string_view key) {
  if (!cfg.is_set(key)) return {};
  return read_claims(cfg, key);
}

/// Loads the index and insists it matches the configured retrieval settings.
CellIndex read_index(const RunConfig& cfg) {
  CellIndex index = CellIndex::load(require_file(index_path(cfg), "index"));
  if (!(index.config() == cfg.index_config())) {
    const std::string msg = "index " + index_path(cfg).string() +
                            " was built with retrieval settings " +
                            index.config().to_json().dump() + ", run config asks for " +
                            cfg.index_config().to_json().dump();
    if (!cfg.get_bool("force")) throw ConfigError(msg + " (rebuild it or set force)");
    std::cerr << "warning: " << msg << "\n";
  }
  return index;
}

std::string index_hash(const CellIndex& index) {
  try {
    return json::parse(index.metadata()).value("config_hash", "");
  } catch (const json::exception&) {
    return "";
  }
}

json hits_json(const std::map<std::size_t, double>& hits) {
  json j = json::object();
  for (const auto& [k, v] : hits) j[std::to_string(k)] = v;
  return j;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_build_index(const RunConfig& cfg) {
  const Corpus corpus = read_corpus(cfg);
  const fs::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);
  OutputWriter out(out_dir, cfg.hash());

  CellIndex index = CellIndex::build(corpus, cfg.index_config(),
                                     static_cast<unsigned>(cfg.get_size("threads")));
  index.set_metadata(json{{"config_hash", cfg.hash()}}.dump());
  const fs::path path = index_path(cfg);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_atomic(path, [&](const fs::path& tmp) { index.save(tmp); });

  const CellIndex back = CellIndex::load(path);
  if (back.doc_count() != index.doc_count() || back.num_tables() != index.num_tables() ||
      !(back.config() == index.config()) || back.metadata() != index.metadata()) {
    throw InvariantError("index " + path.string() + " does not read back unchanged");
  }
  out.json("index_summary.json", {{"index", path.string()},
                                  {"tables", index.num_tables()},
                                  {"documents", index.doc_count()},
                                  {"vocabulary", index.vocabulary_size()},
                                  {"index_config", index.config().to_json()}});
  std::cout << "indexed " << index.num_tables() << " tables (" << index.doc_count()
            << " cells) into " << path.string() << "\n";
}

void cmd_retrieve(const RunConfig& cfg) {
  const std::vector<Claim> claims = read_claims(cfg, "eval_claims");
  const CellIndex index = read_index(cfg);
  const fs::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);
  OutputWriter out(out_dir, cfg.hash());

  const std::vector<std::size_t> ks = cfg.hits_ks();
  const std::size_t depth =
      std::max(cfg.get_size("k"), *std::max_element(ks.begin(), ks.end()));
  const auto rankings =
      index.retrieve_all(claims, depth, static_cast<unsigned>(cfg.get_size("threads")));

  std::vector<json> records;
  records.reserve(claims.size());
  std::vector<Claim> with_gold;
  std::vector<std::vector<ScoredTable>> gold_rankings;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    json ranked = json::array();
    for (const ScoredTable& s : rankings[i]) {
      ranked.push_back({{"table_id", s.table_id}, {"score", s.score}});
    }
    records.push_back({{"claim_id", claims[i].id}, {"ranked", std::move(ranked)}});
    if (claims[i].gold_table_id) {
      with_gold.push_back(claims[i]);
      gold_rankings.push_back(rankings[i]);
    }
  }
  out.jsonl("rankings.jsonl", std::move(records));

  json report = {{"claims", claims.size()},
                 {"claims_with_gold", with_gold.size()},
                 {"depth", depth},
                 {"index_config", index.config().to_json()}};
  std::string csv = "k,hits\n";
  if (!with_gold.empty()) {
    const auto hits = hits_at_k(with_gold, gold_rankings, ks);
    report["hits_at"] = hits_json(hits);
    for (const auto& [k, v] : hits) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", k, v);
      csv += buf;
      std::cout << "H@" << k << " " << v << "\n";
    }
  } else {
    report["hits_at"] = json::object();
    std::cerr << "warning: no claim has a gold table; Hits@k not computed\n";
  }
  out.json("retrieval.json", std::move(report));
  out.csv("retrieval.csv", csv);
}

void cmd_linearize(const RunConfig& cfg) {
  const Corpus corpus = read_corpus(cfg);
  const std::vector<Claim> claims = read_claims(cfg, "eval_claims");
  const CellIndex index = read_index(cfg);
  const fs::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);
  OutputWriter out(out_dir, cfg.hash());

  std::optional<std::size_t> max_rows;
  if (cfg.is_set("max_rows")) max_rows = cfg.get_size("max_rows");
  const auto rankings = index.retrieve_all(claims, cfg.get_size("k"),
                                           static_cast<unsigned>(cfg.get_size("threads")));
  std::vector<json> records;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    for (const ScoredTable& s : rankings[i]) {
      const Table& table = corpus.at(s.table_id);
      const std::vector<std::size_t> kept = select_columns(s, table);
      const Linearisation lin = linearize(claims[i], table, kept, max_rows);
      records.push_back({{"claim_id", claims[i].id},
                         {"table_id", s.table_id},
                         {"text", lin.text},
                         {"kept_columns", lin.kept_columns}});
    }
  }
  out.jsonl("linearisations.jsonl", std::move(records));
}

void cmd_train(const RunConfig& cfg) {
  const Corpus corpus = read_corpus(cfg);
  const std::vector<Claim> claims = read_claims(cfg, "train_claims");
  const std::vector<Claim> dev = read_optional_claims(cfg, "dev_claims");
  const CellIndex index = read_index(cfg);
  const ModelConfig model = cfg.model_config();
  const TrainConfig train_config = cfg.train_config();
  print_warnings(resolve_gold(claims, corpus));

  const fs::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);
  OutputWriter out(out_dir, cfg.hash());

  TrainOutcome outcome = train(claims, corpus, index, model, train_config, dev);
  print_warnings(outcome.warnings);
  outcome.checkpoint.metadata = {{"config_hash", cfg.hash()},
                                 {"index_config_hash", index_hash(index)}};
  const fs::path path = checkpoint_path(cfg);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_atomic(path, [&](const fs::path& tmp) { outcome.checkpoint.save(tmp); });
  if (!(Checkpoint::load(path) == outcome.checkpoint)) {
    throw InvariantError("checkpoint " + path.string() + " does not read back unchanged");
  }

  std::vector<json> log;
  log.reserve(outcome.log.size());
  for (const TrainLogEntry& e : outcome.log) log.push_back(e.to_json());
  out.jsonl("train_log.jsonl", std::move(log));

  json summary = {{"checkpoint", path.string()},
                  {"model", model.to_json()},
                  {"train", train_config.to_json()},
                  {"parameters", outcome.checkpoint.params.parameter_count()},
                  {"steps", outcome.checkpoint.step},
                  {"selected_epoch", outcome.checkpoint.epoch},
                  {"skipped_claims", outcome.checkpoint.skipped_claims},
                  {"dev_accuracy_per_epoch", outcome.dev_accuracy},
                  {"warnings", outcome.warnings}};
  summary["dev_accuracy"] = outcome.checkpoint.dev_accuracy
                                ? json(*outcome.checkpoint.dev_accuracy)
                                : json(nullptr);
  if (!outcome.log.empty()) summary["final_loss"] = outcome.log.back().loss;
  out.json("train_summary.json", std::move(summary));
  std::cout << "trained " << outcome.checkpoint.step << " steps; checkpoint "
            << path.string() << "\n";
}

/// Loads the checkpoint and applies the lineage rule against `index`.
Checkpoint read_checkpoint(const RunConfig& cfg, const CellIndex& index, bool& forced) {
  Checkpoint ckpt = Checkpoint::load(require_file(checkpoint_path(cfg), "checkpoint"));
  forced = false;
  try {
    check_lineage(ckpt, index);
  } catch (const ConfigError& e) {
    if (!cfg.get_bool("force")) throw;
    std::cerr << "warning: " << e.what() << " (continuing because force is set)\n";
    forced = true;
  }
  return ckpt;
}

EvidenceMode evidence_mode(const RunConfig& cfg) {
  const std::string& e = cfg.get("evidence");
  if (e == "retrieved") return EvidenceMode::retrieved;
  if (e == "oracle") return EvidenceMode::oracle;
  throw ConfigError("evidence must be retrieved or oracle, got '" + e + "'");
}

EvalOptions eval_options(const RunConfig& cfg, EvidenceMode evidence) {
  EvalOptions o;
  o.k = cfg.get_size("k");
  o.evidence = evidence;
  o.threads = static_cast<unsigned>(cfg.get_size("threads"));
  return o;
}

json prediction_json(const ClaimOutcome& o) {
  json per_table = json::array();
  for (std::size_t r = 0; r < o.prediction.per_table.rows(); ++r) {
    const auto row = o.prediction.per_table.row(r);
    per_table.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"claim_id", o.claim_id},
          {"label", o.label},
          {"verdict", o.prediction.verdict},
          {"correct", o.correct},
          {"p_true", o.prediction.p_true},
          {"p_s", o.prediction.p_s},
          {"per_table", std::move(per_table)},
          {"table_ids", o.table_ids},
          {"gold_rank", o.gold_rank ? json(*o.gold_rank) : json(nullptr)}};
}

void cmd_evaluate(const RunConfig& cfg) {
  const Corpus corpus = read_corpus(cfg);
  const std::vector<Claim> claims = read_claims(cfg, "eval_claims");
  const CellIndex index = read_index(cfg);
  bool forced = false;
  const Checkpoint ckpt = read_checkpoint(cfg, index, forced);
  const EvidenceMode evidence = evidence_mode(cfg);
  print_warnings(resolve_gold(claims, corpus));

  const fs::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);
  OutputWriter out(out_dir, cfg.hash());

  const Evaluation eval =
      evaluate_checkpoint(ckpt.params, claims, corpus, index, eval_options(cfg, evidence));
  const MetricsReport report = make_report(eval);

  json metrics = report.to_json();
  metrics["evidence"] = cfg.get("evidence");
  metrics["skipped_unlabelled"] = eval.skipped;
  metrics["lineage_forced"] = forced;
  metrics["checkpoint_config_hash"] = ckpt.metadata.value("config_hash", "");
  metrics["head"] = to_string(ckpt.params.config.head);
  if (evidence == EvidenceMode::retrieved) {
    // Accuracy with the gold table alone, over claims whose gold resolves.
    std::vector<Claim> resolvable;
    for (const Claim& c : claims) {
      if (c.label && c.gold_table_id && corpus.contains(*c.gold_table_id)) {
        resolvable.push_back(c);
      }
    }
    if (!resolvable.empty()) {
      const Evaluation oracle = evaluate_checkpoint(
          ckpt.params, resolvable, corpus, index, eval_options(cfg, EvidenceMode::oracle));
      metrics["oracle_accuracy"] = oracle.accuracy;
      metrics["oracle_claims"] = resolvable.size();
      metrics["oracle_gap"] = oracle.accuracy - eval.accuracy;
    }
  }
  out.json("metrics.json", metrics);
  out.csv("metrics.csv", report.to_csv());

  std::vector<json> predictions;
  predictions.reserve(eval.claims.size());
  for (const ClaimOutcome& o : eval.claims) predictions.push_back(prediction_json(o));
  out.jsonl("predictions.jsonl", std::move(predictions));

  if (ckpt.params.config.use_attention && evidence == EvidenceMode::retrieved) {
    // Attention is averaged over claims that received the full k tables.
    std::size_t full_k = 0;
    for (const ClaimOutcome& o : eval.claims) full_k = std::max(full_k, o.table_ids.size());
    std::vector<std::vector<Matrix>> attention;
    std::vector<RankBucket> buckets;
    for (const ClaimOutcome& o : eval.claims) {
      if (o.table_ids.size() != full_k || o.prediction.attention.empty()) continue;
      attention.push_back(o.prediction.attention);
      buckets.push_back(bucket_for_rank(o.gold_rank));
    }
    if (!attention.empty()) {
      out.csv("attention.csv", attention_summary(attention, buckets).to_csv());
    }
  }
  std::cout << "accuracy " << eval.accuracy << " over " << eval.claims.size() << " claims\n";
}

SuitabilityMethod detector_method(const RunConfig& cfg, HeadKind head) {
  const std::string& m = cfg.get("detector_method");
  const SuitabilityMethod method =
      m == "auto" ? (head == HeadKind::ternary ? SuitabilityMethod::ternary_max_relevance
                                               : SuitabilityMethod::joint_entropy)
                  : suitability_method_from_string(m);
  const bool ternary = method == SuitabilityMethod::ternary_max_relevance;
  if (ternary != (head == HeadKind::ternary)) {
    throw ConfigError("detector_method " + to_string(method) +
                      " does not fit a checkpoint with a " + to_string(head) + " head");
  }
  return method;
}

bool positive_is_present(const RunConfig& cfg) {
  const std::string& p = cfg.get("positive_class");
  if (p == "present") return true;
  if (p == "absent") return false;
  throw ConfigError("positive_class must be present or absent, got '" + p + "'");
}

std::vector<LabelledScore> score_claims(const RunConfig& cfg, const Checkpoint& ckpt,
                                        std::span<const Claim> claims, const Corpus& corpus,
                                        const CellIndex& index, SuitabilityMethod method,
                                        std::string_view split) {
  const Evaluation eval = evaluate_checkpoint(
      ckpt.params, claims, corpus, index, eval_options(cfg, EvidenceMode::retrieved));
  std::vector<LabelledScore> scores = suitability_scores(eval, method, claims);
  if (scores.empty()) {
    throw ValidationError("no labelled " + std::string(split) +
                          " claim has a gold table to score");
  }
  return scores;
}

json point_json(const PrPoint& p) {
  return {{"threshold", p.threshold},
          {"precision", p.precision},
          {"recall", p.recall},
          {"f1", p.f1()},
          {"true_positives", p.true_positives},
          {"predicted_positives", p.predicted_positives}};
}

void cmd_detect(const RunConfig& cfg) {
  const Corpus corpus = read_corpus(cfg);
  const std::vector<Claim> claims = read_claims(cfg, "eval_claims");
  const std::vector<Claim> dev = read_optional_claims(cfg, "dev_claims");
  const CellIndex index = read_index(cfg);
  bool forced = false;
  const Checkpoint ckpt = read_checkpoint(cfg, index, forced);
  const SuitabilityMethod method = detector_method(cfg, ckpt.params.config.head);
  const bool present = positive_is_present(cfg);

  const fs::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);
  OutputWriter out(out_dir, cfg.hash());

  const std::vector<LabelledScore> scores =
      score_claims(cfg, ckpt, claims, corpus, index, method, "eval");
  const PrCurve curve = pr_curve(scores, present);
  out.csv("pr_curve.csv", pr_curve_csv(curve));

  PrPoint chosen;
  std::string chosen_on;
  if (!dev.empty()) {
    const auto dev_scores = score_claims(cfg, ckpt, dev, corpus, index, method, "dev");
    const double threshold = pr_curve(dev_scores, present).best_f1().threshold;
    chosen = evaluate_threshold(scores, threshold, present);
    chosen_on = "dev";
  } else {
    chosen = curve.best_f1();
    chosen_on = "eval";
  }
  json interpolated = json::object();
  for (int r = 50; r <= 100; r += 5) {
    char key[16];
    std::snprintf(key, sizeof key, "%.2f", r / 100.0);
    interpolated[key] = curve.interpolated_precision(r / 100.0);
  }
  out.json("operating_point.json",
           {{"method", to_string(method)},
            {"positive_class", cfg.get("positive_class")},
            {"chosen_on", chosen_on},
            {"operating_point", point_json(chosen)},
            {"baseline_precision", curve.baseline_precision},
            {"positives", curve.positives},
            {"total", curve.total},
            {"interpolated_precision", std::move(interpolated)},
            {"lineage_forced", forced}});

  std::vector<json> records;
  for (const LabelledScore& s : scores) {
    records.push_back({{"claim_id", s.score.claim_id},
                       {"score", s.score.score},
                       {"gold_present", s.gold_present}});
  }
  out.jsonl("suitability.jsonl", std::move(records));
  std::cout << "operating point (" << chosen_on << "): precision " << chosen.precision
            << " recall " << chosen.recall << " baseline " << curve.baseline_precision
            << "\n";
}

void cmd_ablate(const RunConfig& cfg) {
  const Corpus corpus = read_corpus(cfg);
  const std::vector<Claim> train_claims = read_claims(cfg, "train_claims");
  const std::vector<Claim> eval_claims = read_claims(cfg, "eval_claims");
  const std::vector<Claim> dev = read_optional_claims(cfg, "dev_claims");
  const CellIndex index = read_index(cfg);
  const ModelConfig model = cfg.model_config();
  const TrainConfig train_config = cfg.train_config();

  const fs::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);
  OutputWriter out(out_dir, cfg.hash());

  const std::vector<AblationResult> results =
      ablate(train_claims, eval_claims, corpus, index, model, train_config, dev);
  json variants = json::array();
  std::string csv = "variant,metric,value\n";
  for (const AblationResult& r : results) {
    variants.push_back({{"name", r.variant.name},
                        {"attention", r.variant.use_attention},
                        {"head", to_string(r.variant.head)},
                        {"report", r.report.to_json()}});
    // Re-key the report's "metric,value" rows by variant, skipping its header.
    const std::string body = r.report.to_csv();
    std::size_t pos = body.find('\n');
    while (pos != std::string::npos && pos + 1 < body.size()) {
      const std::size_t next = body.find('\n', pos + 1);
      csv += r.variant.name + "," +
             body.substr(pos + 1, next == std::string::npos ? std::string::npos
                                                            : next - pos - 1) +
             "\n";
      pos = next;
    }
    std::cout << r.variant.name << " accuracy " << r.report.accuracy << "\n";
  }
  out.json("ablation.json", {{"variants", std::move(variants)}});
  out.csv("ablation.csv", csv);
}

void cmd_make_synthetic(const RunConfig& cfg) {
  const SyntheticData data = make_synthetic(cfg.synthetic_config());
  const fs::path out_dir = output_dir(cfg);
  OutputLock lock(out_dir);
  OutputWriter out(out_dir, cfg.hash());

  std::vector<json> tables;
  for (const Table& t : data.corpus.tables()) tables.push_back(to_json(t));
  out.jsonl("tables.jsonl", std::move(tables));
  const auto claim_records = [](const std::vector<Claim>& claims) {
    std::vector<json> records;
    for (const Claim& c : claims) records.push_back(to_json(c));
    return records;
  };
  out.jsonl("train.jsonl", claim_records(data.train));
  out.jsonl("test.jsonl", claim_records(data.test));
  std::cout << "wrote " << data.corpus.size() << " tables, " << data.train.size()
            << " training and " << data.test.size() << " test claims to "
            << out_dir.string() << "\n";
}

// ---------------------------------------------------------------------------

struct Command {
  const char* name;
  const char* help;
  void (*run)(const RunConfig&);
};

constexpr Command kCommands[] = {
    {"build-index", "index the table corpus (tables) into index", cmd_build_index},
    {"retrieve", "rank tables for eval_claims and report Hits@k", cmd_retrieve},
    {"linearize", "print the linearisations of the top-k tables of eval_claims",
     cmd_linearize},
    {"train", "train a model on train_claims and write checkpoint", cmd_train},
    {"evaluate", "evaluate checkpoint on eval_claims", cmd_evaluate},
    {"detect-insufficient", "precision-recall of gold-table presence on eval_claims",
     cmd_detect},
    {"ablate", "train and evaluate the four model variants", cmd_ablate},
    {"make-synthetic", "write the synthetic separable world to output_dir",
     cmd_make_synthetic},
};

int run(int argc, char** argv) {
  CLI::App app{"tabver: fact verification over collections of tables"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer("Configuration keys (config file 'key = value', environment " +
             std::string(kEnvPrefix) + "<KEY>, or --<key>):\n" + describe_config_keys());

  std::string config_file;
  app.add_option("--config", config_file, "flat key = value configuration file");
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::Option*> options;
  for (const ConfigKey& key : config_keys()) {
    options[key.name] = app.add_option("--" + key.name, flags[key.name], key.help);
  }
  std::map<std::string, CLI::App*> subcommands;
  for (const Command& c : kCommands) subcommands[c.name] = app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    cfg.apply_env();
    for (const auto& [name, option] : options) {
      if (option->count() > 0) cfg.set(name, flags[name]);
    }
    cfg.validate();
    for (const Command& c : kCommands) {
      if (subcommands[c.name]->parsed()) c.run(cfg);
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "tabver: error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace
}  // namespace tabver::cli

int main(int argc, char** argv) { return tabver::cli::run(argc, argv); }
