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

//! Training and evaluation of the verification model.
//!
//! Retrieval, gold injection, linearisation and featurization depend only
//! on the claim and the index, so each claim is prepared once and the
//! feature bags are reused across epochs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabver/corpus.h"
#include "tabver/heads.h"
#include "tabver/model.h"
#include "tabver/retriever.h"

namespace tabver {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t warmup_batches = 100;
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  std::size_t k = 3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  unsigned threads = 0;  // preparation and evaluation only

  /// Learning rate 5e-6, 30000 warmup batches, batch size 32.
  static TrainConfig large_scale();

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  bool operator==(const TrainConfig&) const = default;
};

/// Linear warmup over the first `warmup_batches` steps, then linear decay
/// towards zero at `total_steps`. `step` is 1-based.
double scheduled_learning_rate(const TrainConfig& config, std::size_t step,
                               std::size_t total_steps);

/// Adam with bias correction over a flat view of every parameter.
class Adam {
 public:
  Adam(const TrainConfig& config, std::size_t parameter_count);
  void step(std::span<const TensorRef> params, std::span<const TensorRef> grads,
            double learning_rate);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  std::size_t t_ = 0;
  std::vector<double> m_, v_;
};

enum class EvidenceMode { retrieved, oracle };

/// Evidence for one claim, ready for the model.
struct PreparedClaim {
  std::string claim_id;
  std::optional<bool> label;
  std::vector<std::string> table_ids;  // D_q, or D*_q in training
  std::vector<FeatureBag> bags;
  std::optional<std::size_t> gold_index;  // position of the gold table
  /// 1-based retrieval rank of the gold table within kRankDepth.
  std::optional<std::size_t> gold_rank;
  std::vector<double> retrieval_scores;  // aligned with table_ids
};

/// Gold ranks deeper than this are reported as absent.
inline constexpr std::size_t kRankDepth = 5;

/// Retrieves the top k tables, injects the gold table in training mode,
/// selects columns, linearizes and featurizes. Oracle mode uses the gold
/// table alone. Throws std::out_of_range when the gold table is needed
/// but not in the corpus.
PreparedClaim prepare_claim(const Claim& claim, const Corpus& corpus,
                            const CellIndex& index, std::size_t k, Mode mode,
                            const EncoderConfig& encoder,
                            EvidenceMode evidence = EvidenceMode::retrieved);

struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  ModelParams params;
  TrainConfig train;
  IndexConfig index_config;
  std::string rng_state;
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::size_t skipped_claims = 0;
  std::optional<double> dev_accuracy;
  nlohmann::json metadata = nlohmann::json::object();

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
  bool operator==(const Checkpoint&) const = default;
};

/// Throws ConfigError when the checkpoint was trained on a differently
/// configured index.
void check_lineage(const Checkpoint& checkpoint, const CellIndex& index);

struct TrainLogEntry {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  nlohmann::json to_json() const;
};

struct TrainOutcome {
  Checkpoint checkpoint;
  std::vector<TrainLogEntry> log;
  std::vector<double> dev_accuracy;  // one per epoch when a dev set is given
  std::vector<std::string> warnings;
};

/// Trains the configured model. Claims whose gold table is missing from the
/// corpus are skipped with a warning; claims without a label or gold id
/// throw ValidationError. With a dev set the returned checkpoint is the
/// epoch with the best dev accuracy (earliest on ties).
TrainOutcome train(std::span<const Claim> claims, const Corpus& corpus,
                   const CellIndex& index, const ModelConfig& model,
                   const TrainConfig& config, std::span<const Claim> dev = {},
                   const std::function<void(const TrainLogEntry&)>& on_step = {});

struct ClaimOutcome {
  std::string claim_id;
  bool label = false;
  bool correct = false;
  Prediction prediction;
  std::vector<std::string> table_ids;
  std::optional<std::size_t> gold_index;
  std::optional<std::size_t> gold_rank;
};

struct Evaluation {
  std::vector<ClaimOutcome> claims;
  std::size_t skipped = 0;  // claims without a label
  double accuracy = 0.0;
};

struct EvalOptions {
  std::size_t k = 3;
  EvidenceMode evidence = EvidenceMode::retrieved;
  unsigned threads = 0;
};

/// Inference without gold injection.
Evaluation evaluate_checkpoint(const ModelParams& params,
                               std::span<const Claim> claims,
                               const Corpus& corpus, const CellIndex& index,
                               const EvalOptions& options);
Evaluation evaluate_prepared(const ModelParams& params,
                             std::span<const PreparedClaim> prepared,
                             unsigned threads = 0);

}  // namespace tabver
