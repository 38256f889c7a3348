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

//! Cross-table multi-head attention. Each of the k retrieved tables attends
//! to all k tables of the same claim; head h uses bias-free projections
//! W_Q, W_K, W_V : R^n -> R^(n/H):
//!
//!   alpha_ij = softmax_j( (W_Q f_i) . (W_K f_j) / sqrt(n/H) )
//!   a_i      = sum_j alpha_ij W_V f_j
//!   f*_i     = [f_i, a_i^1, ..., a_i^H]          (length 2n)
//!
//! There is no output projection after the concatenation.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tabver/encoder.h"
#include "tabver/mlp.h"
#include "tabver/tensor.h"

namespace tabver {

struct FusionParams {
  std::vector<Matrix> wq;  // per head, head_dim x dim
  std::vector<Matrix> wk;
  std::vector<Matrix> wv;

  std::size_t num_heads() const { return wq.size(); }
  std::size_t dim() const { return wq.empty() ? 0 : wq.front().cols(); }
  std::size_t head_dim() const { return wq.empty() ? 0 : wq.front().rows(); }

  /// Uniform(-1/sqrt(dim), 1/sqrt(dim)). Throws std::invalid_argument unless
  /// num_heads >= 1 divides dim.
  static FusionParams init(std::size_t dim, std::size_t num_heads, Rng& rng);
  static FusionParams zeros(std::size_t dim, std::size_t num_heads);
  FusionParams zeros_like() const { return zeros(dim(), num_heads()); }

  void append_tensors(std::vector<TensorRef>& out);
  bool operator==(const FusionParams&) const = default;
};

struct FusedBatch {
  Matrix fused;                   // k x 2n
  std::vector<Matrix> attention;  // per head, k x k, row-stochastic
};

struct FusionTrace {
  Matrix input;  // k x n
  std::vector<Matrix> q, k, v, alpha;
};

/// Stacks encodings into a k x n matrix; throws on ragged lengths.
Matrix stack_encodings(std::span<const EncodedTable> encodings);

FusedBatch fuse(const Matrix& encodings, const FusionParams& params);
FusedBatch fuse(std::span<const EncodedTable> encodings,
                const FusionParams& params);
void fuse_forward(const Matrix& encodings, const FusionParams& params,
                  FusionTrace& trace, FusedBatch& out);

/// The no-attention variant: f* = [f, 0].
FusedBatch passthrough(const Matrix& encodings);

/// Accumulates gradients of the fused output into `grads` and
/// `grad_inputs` (k x n).
void fuse_backward(const FusionTrace& trace, const FusionParams& params,
                   const Matrix& upstream, FusionParams& grads,
                   Matrix& grad_inputs);

struct FusionGradients {
  FusionParams params;
  Matrix encodings;
};

/// Gradients of sum(upstream .* fuse(encodings)).
FusionGradients fuse_grad(const Matrix& encodings, const FusionParams& params,
                          const Matrix& upstream);

}  // namespace tabver
