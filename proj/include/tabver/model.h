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

//! The full verification model: encoder, cross-table fusion and one head.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabver/encoder.h"
#include "tabver/fusion.h"
#include "tabver/heads.h"
#include "tabver/tensor.h"

namespace tabver {

/// `binary_uniform` drops the reranking term: each table gets its own
/// binary verdict softmax and the tables are weighted uniformly.
enum class HeadKind { joint, ternary, binary_uniform };

std::string to_string(HeadKind kind);
/// Throws ConfigError.
HeadKind head_kind_from_string(std::string_view s);

struct ModelConfig {
  EncoderConfig encoder;
  std::size_t fusion_heads = 2;
  std::size_t head_hidden = 128;
  bool use_attention = true;
  HeadKind head = HeadKind::joint;

  std::size_t fused_dim() const { return 2 * encoder.output_dim; }

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  ModelConfig config;
  EncoderParams encoder;
  FusionParams fusion;
  HeadParams head;

  static ModelParams init(const ModelConfig& config, Rng& rng);
  static ModelParams zeros(const ModelConfig& config);
  ModelParams zeros_like() const { return zeros(config); }

  /// Every trainable tensor in a fixed, named order.
  std::vector<TensorRef> tensors();
  std::size_t parameter_count();
  bool operator==(const ModelParams&) const = default;
};

struct Prediction {
  bool verdict = false;
  double p_true = 0.0;
  /// Per-table evidence weight: the rerank marginal for the joint head,
  /// normalized relevance (1 - p(irrelevant)) for the ternary head and
  /// uniform for binary_uniform.
  std::vector<double> p_s;
  /// k x 2 joint probabilities, k x 3 ternary probabilities, or k x 2
  /// per-table binary probabilities.
  Matrix per_table;
  std::vector<Matrix> attention;  // empty without attention
};

/// Inference on the featurized linearisations of one claim's tables.
Prediction predict(const ModelParams& params, std::span<const FeatureBag> bags);

/// The configured head's loss for one claim. When `dropout_rng` is set,
/// dropout is sampled from it (training mode). Gradients are added to
/// `grads`.
double loss_and_grad(const ModelParams& params, std::span<const FeatureBag> bags,
                     std::size_t gold_index, bool gold_verdict, Rng* dropout_rng,
                     ModelParams& grads);

/// Loss only, deterministic (no dropout).
double loss(const ModelParams& params, std::span<const FeatureBag> bags,
            std::size_t gold_index, bool gold_verdict);

}  // namespace tabver
