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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tabver/tensor.h"

namespace tabver {

/// Named view over one parameter tensor; used by the optimizer and the
/// checkpoint writer.
struct TensorRef {
  std::string name;
  std::span<double> values;
};

/// Two linear layers with a tanh hidden layer:
///   y = W2 * drop(tanh(W1 * drop(x) + b1)) + b2
struct MlpParams {
  Matrix w1;                // hidden x in
  std::vector<double> b1;   // hidden
  Matrix w2;                // out x hidden
  std::vector<double> b2;   // out

  std::size_t input_dim() const { return w1.cols(); }
  std::size_t hidden_dim() const { return w1.rows(); }
  std::size_t output_dim() const { return w2.rows(); }

  /// Weights uniform in +-1/sqrt(fan_in), zero biases.
  static MlpParams init(std::size_t in, std::size_t hidden, std::size_t out,
                        Rng& rng);
  static MlpParams zeros(std::size_t in, std::size_t hidden, std::size_t out);
  MlpParams zeros_like() const {
    return zeros(input_dim(), hidden_dim(), output_dim());
  }

  void append_tensors(const std::string& prefix, std::vector<TensorRef>& out);
  bool operator==(const MlpParams&) const = default;
};

/// Activations kept for the backward pass. Masks are empty when the pass
/// ran without dropout.
struct MlpTrace {
  std::vector<double> input;
  std::vector<double> input_mask;
  std::vector<double> hidden;  // tanh output, before dropout
  std::vector<double> hidden_mask;
  std::vector<double> output;
};

void mlp_forward(const MlpParams& params, std::span<const double> x,
                 Dropout* dropout, MlpTrace& trace);

/// Accumulates parameter gradients into `grads`; adds dL/dx into `grad_in`
/// when it is non-empty.
void mlp_backward(const MlpParams& params, const MlpTrace& trace,
                  std::span<const double> grad_out, MlpParams& grads,
                  std::span<double> grad_in);

}  // namespace tabver
