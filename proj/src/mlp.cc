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

#include "tabver/mlp.h"

#include <cassert>
#include <cmath>

namespace tabver {

MlpParams MlpParams::init(std::size_t in, std::size_t hidden, std::size_t out,
                          Rng& rng) {
  MlpParams p = zeros(in, hidden, out);
  fill_uniform(p.w1.values(), 1.0 / std::sqrt(static_cast<double>(in)), rng);
  fill_uniform(p.w2.values(), 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  return p;
}

MlpParams MlpParams::zeros(std::size_t in, std::size_t hidden, std::size_t out) {
  return MlpParams{Matrix(hidden, in), std::vector<double>(hidden, 0.0),
                   Matrix(out, hidden), std::vector<double>(out, 0.0)};
}

void MlpParams::append_tensors(const std::string& prefix,
                               std::vector<TensorRef>& out) {
  out.push_back({prefix + ".w1", w1.values()});
  out.push_back({prefix + ".b1", b1});
  out.push_back({prefix + ".w2", w2.values()});
  out.push_back({prefix + ".b2", b2});
}

void mlp_forward(const MlpParams& params, std::span<const double> x,
                 Dropout* dropout, MlpTrace& trace) {
  assert(x.size() == params.input_dim());
  trace.input.assign(x.begin(), x.end());
  std::vector<double> x_in = trace.input;
  trace.input_mask.clear();
  trace.hidden_mask.clear();
  if (dropout != nullptr) {
    trace.input_mask.resize(x.size());
    dropout->sample(trace.input_mask);
    for (std::size_t i = 0; i < x_in.size(); ++i) x_in[i] *= trace.input_mask[i];
  }

  trace.hidden.assign(params.hidden_dim(), 0.0);
  matvec(params.w1, x_in, trace.hidden);
  for (std::size_t i = 0; i < trace.hidden.size(); ++i) {
    trace.hidden[i] = std::tanh(trace.hidden[i] + params.b1[i]);
  }
  std::vector<double> h_in = trace.hidden;
  if (dropout != nullptr) {
    trace.hidden_mask.resize(h_in.size());
    dropout->sample(trace.hidden_mask);
    for (std::size_t i = 0; i < h_in.size(); ++i) h_in[i] *= trace.hidden_mask[i];
  }

  trace.output.assign(params.output_dim(), 0.0);
  matvec(params.w2, h_in, trace.output);
  for (std::size_t i = 0; i < trace.output.size(); ++i) {
    trace.output[i] += params.b2[i];
  }
}

void mlp_backward(const MlpParams& params, const MlpTrace& trace,
                  std::span<const double> grad_out, MlpParams& grads,
                  std::span<double> grad_in) {
  assert(grad_out.size() == params.output_dim());
  const bool dropped = !trace.input_mask.empty();

  std::vector<double> h_in = trace.hidden;
  if (dropped) {
    for (std::size_t i = 0; i < h_in.size(); ++i) h_in[i] *= trace.hidden_mask[i];
  }
  outer_add(grads.w2, grad_out, h_in);
  for (std::size_t i = 0; i < grad_out.size(); ++i) grads.b2[i] += grad_out[i];

  std::vector<double> g_pre(params.hidden_dim(), 0.0);
  matvec_transpose_add(params.w2, grad_out, g_pre);
  for (std::size_t i = 0; i < g_pre.size(); ++i) {
    if (dropped) g_pre[i] *= trace.hidden_mask[i];
    g_pre[i] *= 1.0 - trace.hidden[i] * trace.hidden[i];
  }

  std::vector<double> x_in = trace.input;
  if (dropped) {
    for (std::size_t i = 0; i < x_in.size(); ++i) x_in[i] *= trace.input_mask[i];
  }
  outer_add(grads.w1, g_pre, x_in);
  for (std::size_t i = 0; i < g_pre.size(); ++i) grads.b1[i] += g_pre[i];

  if (!grad_in.empty()) {
    std::vector<double> g_x(params.input_dim(), 0.0);
    matvec_transpose_add(params.w1, g_pre, g_x);
    for (std::size_t i = 0; i < g_x.size(); ++i) {
      grad_in[i] += dropped ? g_x[i] * trace.input_mask[i] : g_x[i];
    }
  }
}

}  // namespace tabver
