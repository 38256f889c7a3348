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

#include "tabver/heads.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "tabver/errors.h"

namespace tabver {
namespace {

std::atomic<std::uint64_t> g_injections{0};

void check_finite(const Matrix& logits) {
  if (!all_finite(logits.values())) {
    throw InvariantError("non-finite head logits");
  }
}

void check_gold(std::size_t gold_index, std::size_t k) {
  if (gold_index >= k) {
    throw std::out_of_range("gold index " + std::to_string(gold_index) +
                            " outside " + std::to_string(k) + " tables");
  }
}

}  // namespace

HeadParams HeadParams::init(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  HeadParams p;
  p.joint = MlpParams::init(input_dim, hidden, 2, rng);
  p.ternary = MlpParams::init(input_dim, hidden, 3, rng);
  return p;
}

HeadParams HeadParams::zeros(std::size_t input_dim, std::size_t hidden) {
  return HeadParams{MlpParams::zeros(input_dim, hidden, 2),
                    MlpParams::zeros(input_dim, hidden, 3)};
}

void HeadParams::append_tensors(std::vector<TensorRef>& out) {
  joint.append_tensors("head.joint", out);
  ternary.append_tensors("head.ternary", out);
}

void head_forward(const Matrix& fused, const MlpParams& mlp, Dropout* dropout,
                  HeadTrace& trace) {
  if (fused.cols() != mlp.input_dim()) {
    throw std::invalid_argument("head input width " + std::to_string(fused.cols()) +
                                " does not match " +
                                std::to_string(mlp.input_dim()));
  }
  trace.rows.resize(fused.rows());
  trace.logits = Matrix(fused.rows(), mlp.output_dim());
  for (std::size_t s = 0; s < fused.rows(); ++s) {
    mlp_forward(mlp, fused.row(s), dropout, trace.rows[s]);
    std::copy(trace.rows[s].output.begin(), trace.rows[s].output.end(),
              trace.logits.row(s).begin());
  }
}

void head_backward(const HeadTrace& trace, const MlpParams& mlp,
                   const Matrix& grad_logits, MlpParams& grads,
                   Matrix& grad_fused) {
  for (std::size_t s = 0; s < trace.rows.size(); ++s) {
    mlp_backward(mlp, trace.rows[s], grad_logits.row(s), grads,
                 grad_fused.rows() == 0 ? std::span<double>{} : grad_fused.row(s));
  }
}

JointDistribution joint_from_logits(const Matrix& logits) {
  check_finite(logits);
  JointDistribution d{logits};
  softmax_inplace(d.probs.values());
  return d;
}

JointDistribution joint_forward(const FusedBatch& fused, const HeadParams& params) {
  HeadTrace trace;
  head_forward(fused.fused, params.joint, nullptr, trace);
  return joint_from_logits(trace.logits);
}

std::pair<double, double> marginal_verdict(const JointDistribution& joint) {
  double t = 0.0, f = 0.0;
  for (std::size_t s = 0; s < joint.num_tables(); ++s) {
    t += joint.probs(s, kTrue);
    f += joint.probs(s, kFalse);
  }
  return {t, f};
}

std::vector<double> marginal_rerank(const JointDistribution& joint) {
  std::vector<double> p(joint.num_tables());
  for (std::size_t s = 0; s < p.size(); ++s) {
    p[s] = joint.probs(s, kTrue) + joint.probs(s, kFalse);
  }
  return p;
}

double joint_loss(const JointDistribution& joint, std::size_t gold_index,
                  bool gold_verdict) {
  check_gold(gold_index, joint.num_tables());
  return -std::log(joint.probs(gold_index, verdict_column(gold_verdict)));
}

Matrix joint_loss_grad(const JointDistribution& joint, std::size_t gold_index,
                       bool gold_verdict) {
  check_gold(gold_index, joint.num_tables());
  Matrix g = joint.probs;
  g(gold_index, verdict_column(gold_verdict)) -= 1.0;
  return g;
}

TernaryDistribution ternary_from_logits(const Matrix& logits) {
  check_finite(logits);
  TernaryDistribution d{logits};
  for (std::size_t s = 0; s < d.probs.rows(); ++s) softmax_inplace(d.probs.row(s));
  return d;
}

TernaryDistribution ternary_forward(const FusedBatch& fused,
                                    const HeadParams& params) {
  HeadTrace trace;
  head_forward(fused.fused, params.ternary, nullptr, trace);
  return ternary_from_logits(trace.logits);
}

double ternary_loss(const TernaryDistribution& dist, std::size_t gold_index,
                    bool gold_verdict) {
  const std::size_t k = dist.num_tables();
  check_gold(gold_index, k);
  double sum = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t label = s == gold_index ? verdict_column(gold_verdict) : kIrrelevant;
    sum += -std::log(dist.probs(s, label));
  }
  return sum / static_cast<double>(k);
}

Matrix ternary_loss_grad(const TernaryDistribution& dist, std::size_t gold_index,
                         bool gold_verdict) {
  const std::size_t k = dist.num_tables();
  check_gold(gold_index, k);
  Matrix g = dist.probs;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t label = s == gold_index ? verdict_column(gold_verdict) : kIrrelevant;
    g(s, label) -= 1.0;
  }
  for (double& v : g.values()) v /= static_cast<double>(k);
  return g;
}

bool ternary_verdict(const TernaryDistribution& dist) {
  double t = 0.0, f = 0.0;
  for (std::size_t s = 0; s < dist.num_tables(); ++s) {
    t += dist.probs(s, kTrue);
    f += dist.probs(s, kFalse);
  }
  return t > f;
}

Matrix binary_from_logits(const Matrix& logits) {
  check_finite(logits);
  Matrix p = logits;
  for (std::size_t s = 0; s < p.rows(); ++s) softmax_inplace(p.row(s));
  return p;
}

double binary_uniform_loss(const Matrix& binary, std::size_t gold_index,
                           bool gold_verdict) {
  check_gold(gold_index, binary.rows());
  return -std::log(binary(gold_index, verdict_column(gold_verdict)));
}

Matrix binary_uniform_loss_grad(const Matrix& binary, std::size_t gold_index,
                                bool gold_verdict) {
  check_gold(gold_index, binary.rows());
  Matrix g(binary.rows(), binary.cols());
  for (std::size_t c = 0; c < binary.cols(); ++c) g(gold_index, c) = binary(gold_index, c);
  g(gold_index, verdict_column(gold_verdict)) -= 1.0;
  return g;
}

double binary_uniform_p_true(const Matrix& binary) {
  double t = 0.0;
  for (std::size_t s = 0; s < binary.rows(); ++s) t += binary(s, kTrue);
  return t / static_cast<double>(binary.rows());
}

std::vector<std::string> inject_gold(std::span<const ScoredTable> retrieved,
                                     const std::string& gold_id, Mode mode) {
  if (mode != Mode::training) {
    throw std::logic_error("gold injection is only permitted during training");
  }
  if (retrieved.empty()) throw std::invalid_argument("inject_gold: nothing retrieved");
  g_injections.fetch_add(1, std::memory_order_relaxed);
  std::vector<std::string> ids;
  ids.reserve(retrieved.size());
  bool present = false;
  for (const ScoredTable& t : retrieved) {
    ids.push_back(t.table_id);
    present = present || t.table_id == gold_id;
  }
  if (!present) ids.back() = gold_id;
  return ids;
}

std::uint64_t gold_injection_count() {
  return g_injections.load(std::memory_order_relaxed);
}

void reset_gold_injection_count() { g_injections.store(0, std::memory_order_relaxed); }

}  // namespace tabver
