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

#include "tabver/encoder.h"

#include <algorithm>
#include <stdexcept>

#include "tabver/errors.h"
#include "tabver/text.h"

namespace tabver {

void EncoderConfig::validate() const {
  if (hash_buckets == 0 || embed_dim == 0 || hidden_dim == 0 || output_dim == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  if (gram_orders.empty()) throw ConfigError("encoder gram_orders is empty");
  for (int o : gram_orders) {
    if (o <= 0) throw ConfigError("encoder gram orders must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("encoder dropout must be in [0, 1)");
  }
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"hash_buckets", hash_buckets}, {"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},     {"output_dim", output_dim},
          {"gram_orders", gram_orders},   {"dropout", dropout}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.hash_buckets = j.at("hash_buckets").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.output_dim = j.at("output_dim").get<std::size_t>();
  c.gram_orders = j.at("gram_orders").get<std::vector<int>>();
  c.dropout = j.at("dropout").get<double>();
  c.validate();
  return c;
}

EncoderParams EncoderParams::init(const EncoderConfig& config, Rng& rng) {
  config.validate();
  EncoderParams p;
  p.config = config;
  p.embedding = Matrix(config.hash_buckets, config.embed_dim);
  fill_uniform(p.embedding.values(), 1.0, rng);
  p.mlp = MlpParams::init(config.embed_dim, config.hidden_dim,
                          config.output_dim, rng);
  return p;
}

EncoderParams EncoderParams::zeros(const EncoderConfig& config) {
  EncoderParams p;
  p.config = config;
  p.embedding = Matrix(config.hash_buckets, config.embed_dim);
  p.mlp = MlpParams::zeros(config.embed_dim, config.hidden_dim, config.output_dim);
  return p;
}

void EncoderParams::append_tensors(std::vector<TensorRef>& out) {
  out.push_back({"encoder.embedding", embedding.values()});
  mlp.append_tensors("encoder.mlp", out);
}

std::uint32_t feature_bucket(std::string_view gram, std::size_t buckets) {
  return static_cast<std::uint32_t>(gram_hash(gram) % buckets);
}

FeatureBag featurize(std::string_view text, const EncoderConfig& config) {
  const std::vector<std::string> grams =
      char_grams(normalize_text(text), config.gram_orders);
  std::vector<std::uint32_t> ids;
  ids.reserve(grams.size());
  for (const std::string& g : grams) {
    ids.push_back(feature_bucket(g, config.hash_buckets));
  }
  std::sort(ids.begin(), ids.end());
  FeatureBag bag;
  bag.total = static_cast<std::uint32_t>(ids.size());
  for (std::size_t i = 0; i < ids.size();) {
    std::size_t j = i;
    while (j < ids.size() && ids[j] == ids[i]) ++j;
    bag.buckets.emplace_back(ids[i], static_cast<std::uint32_t>(j - i));
    i = j;
  }
  return bag;
}

namespace {

std::vector<double> pool(const FeatureBag& bag, const Matrix& embedding) {
  std::vector<double> pooled(embedding.cols(), 0.0);
  if (bag.total == 0) return pooled;
  for (const auto& [bucket, count] : bag.buckets) {
    const std::span<const double> row = embedding.row(bucket);
    const double c = static_cast<double>(count);
    for (std::size_t d = 0; d < pooled.size(); ++d) pooled[d] += c * row[d];
  }
  const double inv = 1.0 / static_cast<double>(bag.total);
  for (double& v : pooled) v *= inv;
  return pooled;
}

}  // namespace

void encode_forward(const FeatureBag& bag, const EncoderParams& params,
                    Dropout* dropout, EncoderTrace& trace) {
  trace.bag = bag;
  const std::vector<double> pooled = pool(bag, params.embedding);
  mlp_forward(params.mlp, pooled, dropout, trace.mlp);
}

EncodedTable encode(const FeatureBag& bag, const EncoderParams& params) {
  EncoderTrace trace;
  encode_forward(bag, params, nullptr, trace);
  return EncodedTable{std::move(trace.mlp.output)};
}

EncodedTable encode(const Linearisation& lin, const EncoderParams& params) {
  return encode(featurize(lin.text, params.config), params);
}

void encode_backward(const EncoderTrace& trace, const EncoderParams& params,
                     std::span<const double> upstream, EncoderParams& grads) {
  std::vector<double> g_pooled(params.embedding.cols(), 0.0);
  mlp_backward(params.mlp, trace.mlp, upstream, grads.mlp, g_pooled);
  if (trace.bag.total == 0) return;
  const double inv = 1.0 / static_cast<double>(trace.bag.total);
  for (const auto& [bucket, count] : trace.bag.buckets) {
    std::span<double> row = grads.embedding.row(bucket);
    const double scale = static_cast<double>(count) * inv;
    for (std::size_t d = 0; d < row.size(); ++d) row[d] += scale * g_pooled[d];
  }
}

EncoderParams encode_grad(const Linearisation& lin, const EncoderParams& params,
                          std::span<const double> upstream) {
  if (upstream.size() != params.output_dim()) {
    throw std::invalid_argument("upstream gradient has length " +
                                std::to_string(upstream.size()) + ", expected " +
                                std::to_string(params.output_dim()));
  }
  EncoderTrace trace;
  encode_forward(featurize(lin.text, params.config), params, nullptr, trace);
  EncoderParams grads = params.zeros_like();
  encode_backward(trace, params, upstream, grads);
  return grads;
}

}  // namespace tabver
