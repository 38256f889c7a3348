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

//! Reference linearisation encoder: mean of hashed character n-gram
//! embeddings followed by a tanh MLP. Downstream modules only rely on
//! encode / encode_backward and the output width, so any other
//! differentiable encoder can take its place.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tabver/linearizer.h"
#include "tabver/mlp.h"
#include "tabver/tensor.h"

namespace tabver {

struct EncoderConfig {
  std::size_t hash_buckets = std::size_t{1} << 15;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t output_dim = 64;
  std::vector<int> gram_orders{2, 3};
  double dropout = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
  bool operator==(const EncoderConfig&) const = default;
};

struct EncodedTable {
  std::vector<double> vector;
};

struct EncoderParams {
  EncoderConfig config;
  Matrix embedding;  // hash_buckets x embed_dim
  MlpParams mlp;     // embed_dim -> hidden_dim -> output_dim

  static EncoderParams init(const EncoderConfig& config, Rng& rng);
  static EncoderParams zeros(const EncoderConfig& config);
  EncoderParams zeros_like() const { return zeros(config); }

  std::size_t output_dim() const { return mlp.output_dim(); }
  void append_tensors(std::vector<TensorRef>& out);
  bool operator==(const EncoderParams&) const = default;
};

/// Bucket histogram of a text's character n-grams.
struct FeatureBag {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> buckets;  // sorted
  std::uint32_t total = 0;
};

std::uint32_t feature_bucket(std::string_view gram, std::size_t buckets);
FeatureBag featurize(std::string_view text, const EncoderConfig& config);

struct EncoderTrace {
  FeatureBag bag;
  MlpTrace mlp;
};

/// Inference-mode encoding (no dropout).
EncodedTable encode(const Linearisation& lin, const EncoderParams& params);
EncodedTable encode(const FeatureBag& bag, const EncoderParams& params);

/// Training-capable forward pass; `dropout` may be null.
void encode_forward(const FeatureBag& bag, const EncoderParams& params,
                    Dropout* dropout, EncoderTrace& trace);
/// Accumulates dL/dparams given dL/doutput.
void encode_backward(const EncoderTrace& trace, const EncoderParams& params,
                     std::span<const double> upstream, EncoderParams& grads);

/// Gradient of upstream . encode(lin) with respect to every parameter.
/// Throws std::invalid_argument if `upstream` has the wrong length.
EncoderParams encode_grad(const Linearisation& lin, const EncoderParams& params,
                          std::span<const double> upstream);

}  // namespace tabver
