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

#include "tabver/model.h"

#include <optional>
#include <stdexcept>

#include "tabver/errors.h"

namespace tabver {

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::joint: return "joint";
    case HeadKind::ternary: return "ternary";
    case HeadKind::binary_uniform: return "binary_uniform";
  }
  return "unknown";
}

HeadKind head_kind_from_string(std::string_view s) {
  if (s == "joint") return HeadKind::joint;
  if (s == "ternary") return HeadKind::ternary;
  if (s == "binary_uniform") return HeadKind::binary_uniform;
  throw ConfigError("unknown head '" + std::string(s) +
                    "' (expected joint, ternary or binary_uniform)");
}

void ModelConfig::validate() const {
  encoder.validate();
  if (fusion_heads == 0 || encoder.output_dim % fusion_heads != 0) {
    throw ConfigError("fusion_heads must be positive and divide output_dim " +
                      std::to_string(encoder.output_dim));
  }
  if (head_hidden == 0) throw ConfigError("head_hidden must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"encoder", encoder.to_json()},
          {"fusion_heads", fusion_heads},
          {"head_hidden", head_hidden},
          {"use_attention", use_attention},
          {"head", to_string(head)}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.encoder = EncoderConfig::from_json(j.at("encoder"));
  c.fusion_heads = j.at("fusion_heads").get<std::size_t>();
  c.head_hidden = j.at("head_hidden").get<std::size_t>();
  c.use_attention = j.at("use_attention").get<bool>();
  c.head = head_kind_from_string(j.at("head").get<std::string>());
  c.validate();
  return c;
}

ModelParams ModelParams::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.encoder = EncoderParams::init(config.encoder, rng);
  p.fusion = FusionParams::init(config.encoder.output_dim, config.fusion_heads, rng);
  p.head = HeadParams::init(config.fused_dim(), config.head_hidden, rng);
  return p;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.encoder = EncoderParams::zeros(config.encoder);
  p.fusion = FusionParams::zeros(config.encoder.output_dim, config.fusion_heads);
  p.head = HeadParams::zeros(config.fused_dim(), config.head_hidden);
  return p;
}

std::vector<TensorRef> ModelParams::tensors() {
  std::vector<TensorRef> out;
  encoder.append_tensors(out);
  fusion.append_tensors(out);
  head.append_tensors(out);
  return out;
}

std::size_t ModelParams::parameter_count() {
  std::size_t n = 0;
  for (const TensorRef& t : tensors()) n += t.values.size();
  return n;
}

namespace {

const MlpParams& head_mlp(const ModelParams& params) {
  return params.config.head == HeadKind::ternary ? params.head.ternary
                                                 : params.head.joint;
}

struct Forward {
  std::vector<EncoderTrace> encoders;
  Matrix encodings;
  FusionTrace fusion;
  FusedBatch fused;
  HeadTrace head;
};

void forward(const ModelParams& params, std::span<const FeatureBag> bags,
             Dropout* dropout, Forward& fw) {
  if (bags.empty()) throw std::invalid_argument("model: no tables for claim");
  const std::size_t n = params.encoder.output_dim();
  fw.encoders.resize(bags.size());
  fw.encodings = Matrix(bags.size(), n);
  for (std::size_t i = 0; i < bags.size(); ++i) {
    encode_forward(bags[i], params.encoder, dropout, fw.encoders[i]);
    const std::vector<double>& out = fw.encoders[i].mlp.output;
    std::copy(out.begin(), out.end(), fw.encodings.row(i).begin());
  }
  if (params.config.use_attention) {
    fuse_forward(fw.encodings, params.fusion, fw.fusion, fw.fused);
  } else {
    fw.fused = passthrough(fw.encodings);
  }
  head_forward(fw.fused.fused, head_mlp(params), dropout, fw.head);
}

double head_loss(const ModelParams& params, const Matrix& logits,
                 std::size_t gold_index, bool gold_verdict, Matrix* grad_logits) {
  switch (params.config.head) {
    case HeadKind::joint: {
      const JointDistribution d = joint_from_logits(logits);
      if (grad_logits) *grad_logits = joint_loss_grad(d, gold_index, gold_verdict);
      return joint_loss(d, gold_index, gold_verdict);
    }
    case HeadKind::ternary: {
      const TernaryDistribution d = ternary_from_logits(logits);
      if (grad_logits) *grad_logits = ternary_loss_grad(d, gold_index, gold_verdict);
      return ternary_loss(d, gold_index, gold_verdict);
    }
    case HeadKind::binary_uniform: {
      const Matrix b = binary_from_logits(logits);
      if (grad_logits) {
        *grad_logits = binary_uniform_loss_grad(b, gold_index, gold_verdict);
      }
      return binary_uniform_loss(b, gold_index, gold_verdict);
    }
  }
  throw std::logic_error("unhandled head kind");
}

}  // namespace

Prediction predict(const ModelParams& params, std::span<const FeatureBag> bags) {
  Forward fw;
  forward(params, bags, nullptr, fw);
  const std::size_t k = bags.size();
  Prediction p;
  p.attention = fw.fused.attention;
  switch (params.config.head) {
    case HeadKind::joint: {
      JointDistribution d = joint_from_logits(fw.head.logits);
      const auto [t, f] = marginal_verdict(d);
      p.p_true = t;
      p.verdict = t > f;
      p.p_s = marginal_rerank(d);
      p.per_table = std::move(d.probs);
      break;
    }
    case HeadKind::ternary: {
      TernaryDistribution d = ternary_from_logits(fw.head.logits);
      double t = 0.0, f = 0.0, rel = 0.0;
      p.p_s.resize(k);
      for (std::size_t s = 0; s < k; ++s) {
        t += d.probs(s, kTrue);
        f += d.probs(s, kFalse);
        p.p_s[s] = 1.0 - d.probs(s, kIrrelevant);
        rel += p.p_s[s];
      }
      for (double& v : p.p_s) v = rel > 0.0 ? v / rel : 1.0 / static_cast<double>(k);
      p.p_true = t + f > 0.0 ? t / (t + f) : 0.5;
      p.verdict = ternary_verdict(d);
      p.per_table = std::move(d.probs);
      break;
    }
    case HeadKind::binary_uniform: {
      Matrix b = binary_from_logits(fw.head.logits);
      p.p_true = binary_uniform_p_true(b);
      p.verdict = p.p_true > 0.5;
      p.p_s.assign(k, 1.0 / static_cast<double>(k));
      p.per_table = std::move(b);
      break;
    }
  }
  return p;
}

double loss_and_grad(const ModelParams& params, std::span<const FeatureBag> bags,
                     std::size_t gold_index, bool gold_verdict, Rng* dropout_rng,
                     ModelParams& grads) {
  std::optional<Dropout> dropout;
  if (dropout_rng && params.config.encoder.dropout > 0.0) {
    dropout.emplace(params.config.encoder.dropout, *dropout_rng);
  }
  Forward fw;
  forward(params, bags, dropout ? &*dropout : nullptr, fw);

  Matrix grad_logits;
  const double value = head_loss(params, fw.head.logits, gold_index, gold_verdict,
                                 &grad_logits);

  const std::size_t k = bags.size();
  const std::size_t n = params.encoder.output_dim();
  Matrix grad_fused(k, 2 * n);
  MlpParams& head_grads =
      params.config.head == HeadKind::ternary ? grads.head.ternary : grads.head.joint;
  head_backward(fw.head, head_mlp(params), grad_logits, head_grads, grad_fused);

  Matrix grad_enc(k, n);
  if (params.config.use_attention) {
    fuse_backward(fw.fusion, params.fusion, grad_fused, grads.fusion, grad_enc);
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      const auto src = grad_fused.row(i).subspan(0, n);
      std::copy(src.begin(), src.end(), grad_enc.row(i).begin());
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    encode_backward(fw.encoders[i], params.encoder, grad_enc.row(i), grads.encoder);
  }
  return value;
}

double loss(const ModelParams& params, std::span<const FeatureBag> bags,
            std::size_t gold_index, bool gold_verdict) {
  Forward fw;
  forward(params, bags, nullptr, fw);
  return head_loss(params, fw.head.logits, gold_index, gold_verdict, nullptr);
}

}  // namespace tabver
