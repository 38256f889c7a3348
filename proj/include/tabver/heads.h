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

//! Output heads over the fused table representations.
//!
//! Joint reranking-and-verification: one categorical over the 2k
//! (table, verdict) pairs, p(s, v) = softmax over all s, v of W(f*_s)_v.
//! The verdict marginalizes over tables, the reranker over verdicts.
//!
//! Ternary verification: per table an independent softmax over
//! {true, false, irrelevant}; the verdict compares summed true and false
//! mass across tables.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tabver/fusion.h"
#include "tabver/mlp.h"
#include "tabver/retriever.h"
#include "tabver/tensor.h"

namespace tabver {

inline constexpr std::size_t kTrue = 0;
inline constexpr std::size_t kFalse = 1;
inline constexpr std::size_t kIrrelevant = 2;

inline std::size_t verdict_column(bool verdict) { return verdict ? kTrue : kFalse; }

struct HeadParams {
  MlpParams joint;    // 2n -> hidden -> 2
  MlpParams ternary;  // 2n -> hidden -> 3

  static HeadParams init(std::size_t input_dim, std::size_t hidden, Rng& rng);
  static HeadParams zeros(std::size_t input_dim, std::size_t hidden);
  HeadParams zeros_like() const {
    return zeros(joint.input_dim(), joint.hidden_dim());
  }
  void append_tensors(std::vector<TensorRef>& out);
  bool operator==(const HeadParams&) const = default;
};

/// k x 2 matrix (columns true, false) summing to 1 over all entries.
struct JointDistribution {
  Matrix probs;
  std::size_t num_tables() const { return probs.rows(); }
};

/// k x 3 matrix (columns true, false, irrelevant); each row sums to 1.
struct TernaryDistribution {
  Matrix probs;
  std::size_t num_tables() const { return probs.rows(); }
};

/// Per-row MLP application with the activations needed for backward.
struct HeadTrace {
  std::vector<MlpTrace> rows;
  Matrix logits;
};

void head_forward(const Matrix& fused, const MlpParams& mlp, Dropout* dropout,
                  HeadTrace& trace);
/// Accumulates MLP gradients and dL/dfused (k x 2n); pass an empty matrix
/// to skip the input gradient.
void head_backward(const HeadTrace& trace, const MlpParams& mlp,
                   const Matrix& grad_logits, MlpParams& grads,
                   Matrix& grad_fused);

/// Joint softmax over every entry. Throws InvariantError on non-finite
/// logits.
JointDistribution joint_from_logits(const Matrix& logits);
JointDistribution joint_forward(const FusedBatch& fused, const HeadParams& params);

/// (p_true, p_false), summed over tables.
std::pair<double, double> marginal_verdict(const JointDistribution& joint);
/// p_s(s), summed over verdicts.
std::vector<double> marginal_rerank(const JointDistribution& joint);

/// -ln p(s = gold_index, v = gold_verdict).
double joint_loss(const JointDistribution& joint, std::size_t gold_index,
                  bool gold_verdict);
/// dL/dlogits of joint_loss: p - onehot.
Matrix joint_loss_grad(const JointDistribution& joint, std::size_t gold_index,
                       bool gold_verdict);

/// Row-wise softmax. Throws InvariantError on non-finite logits.
TernaryDistribution ternary_from_logits(const Matrix& logits);
TernaryDistribution ternary_forward(const FusedBatch& fused,
                                    const HeadParams& params);

/// Mean over tables of -ln p(label_t); the gold table is labelled with the
/// verdict, every other table irrelevant.
double ternary_loss(const TernaryDistribution& dist, std::size_t gold_index,
                    bool gold_verdict);
Matrix ternary_loss_grad(const TernaryDistribution& dist, std::size_t gold_index,
                         bool gold_verdict);

/// Summed true mass strictly greater than summed false mass; ties refute.
bool ternary_verdict(const TernaryDistribution& dist);

/// Per-table binary softmax over the joint head's two logits, used by the
/// ablation that drops the reranking term and assumes p(s) = 1/k.
Matrix binary_from_logits(const Matrix& logits);
/// -ln p(gold_verdict | gold table).
double binary_uniform_loss(const Matrix& binary, std::size_t gold_index,
                           bool gold_verdict);
Matrix binary_uniform_loss_grad(const Matrix& binary, std::size_t gold_index,
                                bool gold_verdict);
/// p(true) = (1/k) sum_s p(true | s).
double binary_uniform_p_true(const Matrix& binary);

enum class Mode { training, evaluation };

/// D*_q: the retrieved ids with the last one replaced by `gold_id` when the
/// gold table was not retrieved. Throws std::logic_error outside training
/// and std::invalid_argument for an empty retrieval.
std::vector<std::string> inject_gold(std::span<const ScoredTable> retrieved,
                                     const std::string& gold_id, Mode mode);

/// Number of inject_gold invocations since the last reset, process-wide.
std::uint64_t gold_injection_count();
void reset_gold_injection_count();

}  // namespace tabver
