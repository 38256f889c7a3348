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

#include "tabver/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "tabver/binary_io.h"
#include "tabver/errors.h"
#include "tabver/linearizer.h"
#include "tabver/parallel.h"

namespace tabver {

TrainConfig TrainConfig::large_scale() {
  TrainConfig c;
  c.learning_rate = 5e-6;
  c.warmup_batches = 30000;
  c.batch_size = 32;
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (k == 0) throw ConfigError("k must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"warmup_batches", warmup_batches},
          {"batch_size", batch_size},       {"epochs", epochs},
          {"seed", seed},                   {"k", k},
          {"beta1", beta1},                 {"beta2", beta2},
          {"epsilon", epsilon}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.warmup_batches = j.at("warmup_batches").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.k = j.at("k").get<std::size_t>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.validate();
  return c;
}

double scheduled_learning_rate(const TrainConfig& config, std::size_t step,
                               std::size_t total_steps) {
  const double lr = config.learning_rate;
  if (step == 0) return 0.0;
  if (step <= config.warmup_batches) {
    return lr * static_cast<double>(step) / static_cast<double>(config.warmup_batches);
  }
  if (total_steps <= config.warmup_batches) return lr;
  const double remaining = static_cast<double>(total_steps + 1) - static_cast<double>(step);
  const double span = static_cast<double>(total_steps - config.warmup_batches);
  return lr * std::max(0.0, remaining / span);
}

Adam::Adam(const TrainConfig& config, std::size_t parameter_count)
    : beta1_(config.beta1),
      beta2_(config.beta2),
      epsilon_(config.epsilon),
      m_(parameter_count, 0.0),
      v_(parameter_count, 0.0) {}

void Adam::step(std::span<const TensorRef> params, std::span<const TensorRef> grads,
                double learning_rate) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("Adam: parameter and gradient lists differ");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::span<double> p = params[i].values;
    const std::span<double> g = grads[i].values;
    if (p.size() != g.size() || offset + p.size() > m_.size()) {
      throw std::invalid_argument("Adam: tensor '" + params[i].name + "' has the wrong size");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      double& m = m_[offset + j];
      double& v = v_[offset + j];
      m = beta1_ * m + (1.0 - beta1_) * g[j];
      v = beta2_ * v + (1.0 - beta2_) * g[j] * g[j];
      p[j] -= learning_rate * (m / c1) / (std::sqrt(v / c2) + epsilon_);
    }
    offset += p.size();
  }
}

PreparedClaim prepare_claim(const Claim& claim, const Corpus& corpus,
                            const CellIndex& index, std::size_t k, Mode mode,
                            const EncoderConfig& encoder, EvidenceMode evidence) {
  if (k == 0) throw std::invalid_argument("prepare_claim: k must be positive");
  PreparedClaim out;
  out.claim_id = claim.id;
  out.label = claim.label;

  std::vector<ScoredTable> evidence_tables;
  if (evidence == EvidenceMode::oracle) {
    if (!claim.gold_table_id) {
      throw ValidationError("claim '" + claim.id + "' has no gold table for oracle evidence");
    }
    evidence_tables.push_back(index.score_table(claim, *claim.gold_table_id));
    out.gold_rank = std::nullopt;
  } else {
    std::vector<ScoredTable> ranked =
        index.retrieve_topk(claim, std::max(k, kRankDepth));
    if (claim.gold_table_id) {
      for (std::size_t r = 0; r < ranked.size() && r < kRankDepth; ++r) {
        if (ranked[r].table_id == *claim.gold_table_id) out.gold_rank = r + 1;
      }
    }
    if (ranked.size() > k) ranked.resize(k);
    if (mode == Mode::training) {
      if (!claim.gold_table_id) {
        throw ValidationError("training claim '" + claim.id + "' has no gold table");
      }
      const std::vector<std::string> ids =
          inject_gold(ranked, *claim.gold_table_id, Mode::training);
      if (ids.back() != ranked.back().table_id) {
        ranked.back() = index.score_table(claim, ids.back());
      }
    }
    evidence_tables = std::move(ranked);
  }

  for (std::size_t i = 0; i < evidence_tables.size(); ++i) {
    const ScoredTable& scored = evidence_tables[i];
    const Table& table = corpus.at(scored.table_id);
    const std::vector<std::size_t> kept = select_columns(scored, table);
    const Linearisation lin = linearize(claim, table, kept);
    out.table_ids.push_back(scored.table_id);
    out.retrieval_scores.push_back(scored.score);
    out.bags.push_back(featurize(lin.text, encoder));
    if (claim.gold_table_id && scored.table_id == *claim.gold_table_id) {
      out.gold_index = i;
    }
  }
  return out;
}

namespace {

constexpr char kCheckpointMagic[8] = {'T', 'A', 'B', 'V', 'C', 'K', 'P', 'T'};

void zero(std::vector<TensorRef> tensors) {
  for (TensorRef& t : tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
}

void scale(std::vector<TensorRef> tensors, double factor) {
  for (TensorRef& t : tensors) {
    for (double& v : t.values) v *= factor;
  }
}

std::vector<PreparedClaim> prepare_all(std::span<const Claim> claims,
                                       const Corpus& corpus, const CellIndex& index,
                                       std::size_t k, Mode mode,
                                       const EncoderConfig& encoder, unsigned threads) {
  std::vector<PreparedClaim> out(claims.size());
  parallel_for(claims.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = prepare_claim(claims[i], corpus, index, k, mode, encoder);
    }
  });
  return out;
}

}  // namespace

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  nlohmann::json header = {
      {"model", params.config.to_json()},
      {"train", train.to_json()},
      {"index_config", index_config.to_json()},
      {"index_fingerprint", index_config.fingerprint()},
      {"rng_state", rng_state},
      {"epoch", epoch},
      {"step", step},
      {"skipped_claims", skipped_claims},
      {"dev_accuracy", dev_accuracy ? nlohmann::json(*dev_accuracy) : nlohmann::json()},
      {"metadata", metadata}};
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  io::write_u32(out, kFormatVersion);
  io::write_string(out, header.dump());
  std::vector<TensorRef> tensors = const_cast<ModelParams&>(params).tensors();
  io::write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const TensorRef& t : tensors) {
    io::write_string(out, t.name);
    io::write_f64s(out, t.values);
  }
  if (!out) throw InputError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  char magic[sizeof kCheckpointMagic];
  io::read_raw(in, magic, sizeof magic);
  if (!std::equal(magic, magic + sizeof magic, kCheckpointMagic)) {
    throw ParseError(path.string() + " is not a checkpoint file");
  }
  const std::uint32_t version = io::read_u32(in);
  if (version != kFormatVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const nlohmann::json header = nlohmann::json::parse(io::read_string(in));

  Checkpoint c;
  c.params = ModelParams::zeros(ModelConfig::from_json(header.at("model")));
  c.train = TrainConfig::from_json(header.at("train"));
  c.index_config = IndexConfig::from_json(header.at("index_config"));
  if (header.at("index_fingerprint").get<std::uint64_t>() != c.index_config.fingerprint()) {
    throw ParseError("checkpoint index fingerprint does not match its index config");
  }
  c.rng_state = header.at("rng_state").get<std::string>();
  c.epoch = header.at("epoch").get<std::size_t>();
  c.step = header.at("step").get<std::size_t>();
  c.skipped_claims = header.at("skipped_claims").get<std::size_t>();
  if (!header.at("dev_accuracy").is_null()) {
    c.dev_accuracy = header.at("dev_accuracy").get<double>();
  }
  c.metadata = header.value("metadata", nlohmann::json::object());

  std::vector<TensorRef> tensors = c.params.tensors();
  const std::uint32_t count = io::read_u32(in);
  if (count != tensors.size()) {
    throw ParseError("checkpoint holds " + std::to_string(count) + " tensors, expected " +
                     std::to_string(tensors.size()));
  }
  for (TensorRef& t : tensors) {
    const std::string name = io::read_string(in);
    if (name != t.name) {
      throw ParseError("checkpoint tensor '" + name + "' where '" + t.name + "' was expected");
    }
    const std::vector<double> values = io::read_f64s(in);
    if (values.size() != t.values.size()) {
      throw ParseError("checkpoint tensor '" + name + "' has the wrong size");
    }
    std::copy(values.begin(), values.end(), t.values.begin());
  }
  return c;
}

void check_lineage(const Checkpoint& checkpoint, const CellIndex& index) {
  if (checkpoint.index_config.fingerprint() != index.config().fingerprint()) {
    throw ConfigError("checkpoint was trained with index config " +
                      checkpoint.index_config.to_json().dump() +
                      " but the supplied index uses " + index.config().to_json().dump());
  }
}

nlohmann::json TrainLogEntry::to_json() const {
  return {{"step", step}, {"epoch", epoch}, {"loss", loss}, {"lr", lr}};
}

TrainOutcome train(std::span<const Claim> claims, const Corpus& corpus,
                   const CellIndex& index, const ModelConfig& model,
                   const TrainConfig& config, std::span<const Claim> dev,
                   const std::function<void(const TrainLogEntry&)>& on_step) {
  config.validate();
  model.validate();
  TrainOutcome outcome;

  std::vector<Claim> usable;
  for (const Claim& c : claims) {
    if (!c.label || !c.gold_table_id) {
      throw ValidationError("training claim '" + c.id + "' needs a label and a gold table");
    }
    if (!corpus.contains(*c.gold_table_id)) {
      outcome.warnings.push_back("skipping claim '" + c.id + "': gold table '" +
                                 *c.gold_table_id + "' is not in the corpus");
      continue;
    }
    usable.push_back(c);
  }
  const std::vector<PreparedClaim> prepared = prepare_all(
      usable, corpus, index, config.k, Mode::training, model.encoder, config.threads);
  const std::vector<PreparedClaim> dev_prepared = prepare_all(
      dev, corpus, index, config.k, Mode::evaluation, model.encoder, config.threads);

  Rng rng(config.seed);
  ModelParams params = ModelParams::init(model, rng);
  ModelParams grads = params.zeros_like();
  Adam adam(config, params.parameter_count());

  Checkpoint& best = outcome.checkpoint;
  best.params = params;
  best.train = config;
  best.index_config = index.config();
  best.rng_state = rng.state();
  best.skipped_claims = claims.size() - usable.size();

  const std::size_t n = prepared.size();
  const std::size_t batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = batches_per_epoch * config.epochs;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::optional<double> best_dev;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::size_t e = std::min(n, b + config.batch_size);
      zero(grads.tensors());
      double batch_loss = 0.0;
      for (std::size_t i = b; i < e; ++i) {
        const PreparedClaim& pc = prepared[order[i]];
        batch_loss += loss_and_grad(params, pc.bags, *pc.gold_index, *pc.label, &rng, grads);
      }
      const double inv = 1.0 / static_cast<double>(e - b);
      scale(grads.tensors(), inv);
      ++step;
      const double lr = scheduled_learning_rate(config, step, total_steps);
      adam.step(params.tensors(), grads.tensors(), lr);
      TrainLogEntry entry{step, epoch, batch_loss * inv, lr};
      if (on_step) on_step(entry);
      outcome.log.push_back(entry);
    }
    if (!dev_prepared.empty()) {
      const double acc = evaluate_prepared(params, dev_prepared, config.threads).accuracy;
      outcome.dev_accuracy.push_back(acc);
      if (!best_dev || acc > *best_dev) {
        best_dev = acc;
        best.params = params;
        best.epoch = epoch;
        best.step = step;
        best.rng_state = rng.state();
        best.dev_accuracy = acc;
      }
    }
  }
  if (dev_prepared.empty()) {
    best.params = std::move(params);
    best.epoch = config.epochs;
    best.step = step;
    best.rng_state = rng.state();
  }
  return outcome;
}

Evaluation evaluate_prepared(const ModelParams& params,
                             std::span<const PreparedClaim> prepared,
                             unsigned threads) {
  Evaluation ev;
  std::vector<std::optional<ClaimOutcome>> slots(prepared.size());
  parallel_for(prepared.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PreparedClaim& pc = prepared[i];
      if (!pc.label) continue;
      ClaimOutcome o;
      o.claim_id = pc.claim_id;
      o.label = *pc.label;
      o.prediction = predict(params, pc.bags);
      o.correct = o.prediction.verdict == o.label;
      o.table_ids = pc.table_ids;
      o.gold_index = pc.gold_index;
      o.gold_rank = pc.gold_rank;
      slots[i] = std::move(o);
    }
  });
  std::size_t correct = 0;
  for (std::optional<ClaimOutcome>& s : slots) {
    if (!s) {
      ++ev.skipped;
      continue;
    }
    correct += s->correct ? 1 : 0;
    ev.claims.push_back(std::move(*s));
  }
  ev.accuracy = ev.claims.empty()
                    ? 0.0
                    : static_cast<double>(correct) / static_cast<double>(ev.claims.size());
  return ev;
}

Evaluation evaluate_checkpoint(const ModelParams& params,
                               std::span<const Claim> claims,
                               const Corpus& corpus, const CellIndex& index,
                               const EvalOptions& options) {
  std::vector<PreparedClaim> prepared(claims.size());
  parallel_for(claims.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      prepared[i] = prepare_claim(claims[i], corpus, index, options.k, Mode::evaluation,
                                  params.config.encoder, options.evidence);
    }
  });
  return evaluate_prepared(params, prepared, options.threads);
}

}  // namespace tabver
