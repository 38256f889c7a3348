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

#include "tabver/fusion.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tabver {
namespace {

void check_heads(std::size_t dim, std::size_t num_heads) {
  if (num_heads == 0 || dim == 0 || dim % num_heads != 0) {
    throw std::invalid_argument("fusion: " + std::to_string(num_heads) +
                                " heads do not divide dimension " +
                                std::to_string(dim));
  }
}

// rows(x) projected: out(i, :) = w * x(i, :)
Matrix project(const Matrix& w, const Matrix& x) {
  Matrix out(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) matvec(w, x.row(i), out.row(i));
  return out;
}

}  // namespace

FusionParams FusionParams::init(std::size_t dim, std::size_t num_heads, Rng& rng) {
  FusionParams p = zeros(dim, num_heads);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t h = 0; h < num_heads; ++h) {
    fill_uniform(p.wq[h].values(), bound, rng);
    fill_uniform(p.wk[h].values(), bound, rng);
    fill_uniform(p.wv[h].values(), bound, rng);
  }
  return p;
}

FusionParams FusionParams::zeros(std::size_t dim, std::size_t num_heads) {
  check_heads(dim, num_heads);
  const std::size_t head_dim = dim / num_heads;
  FusionParams p;
  p.wq.assign(num_heads, Matrix(head_dim, dim));
  p.wk.assign(num_heads, Matrix(head_dim, dim));
  p.wv.assign(num_heads, Matrix(head_dim, dim));
  return p;
}

void FusionParams::append_tensors(std::vector<TensorRef>& out) {
  for (std::size_t h = 0; h < num_heads(); ++h) {
    const std::string prefix = "fusion.head" + std::to_string(h);
    out.push_back({prefix + ".wq", wq[h].values()});
    out.push_back({prefix + ".wk", wk[h].values()});
    out.push_back({prefix + ".wv", wv[h].values()});
  }
}

Matrix stack_encodings(std::span<const EncodedTable> encodings) {
  if (encodings.empty()) throw std::invalid_argument("fusion: no encodings");
  const std::size_t n = encodings.front().vector.size();
  Matrix out(encodings.size(), n);
  for (std::size_t i = 0; i < encodings.size(); ++i) {
    if (encodings[i].vector.size() != n) {
      throw std::invalid_argument("fusion: encodings differ in length");
    }
    std::copy(encodings[i].vector.begin(), encodings[i].vector.end(),
              out.row(i).begin());
  }
  return out;
}

void fuse_forward(const Matrix& encodings, const FusionParams& params,
                  FusionTrace& trace, FusedBatch& out) {
  const std::size_t k = encodings.rows();
  const std::size_t n = encodings.cols();
  if (k == 0) throw std::invalid_argument("fusion: no encodings");
  if (n != params.dim()) {
    throw std::invalid_argument("fusion: encoding length " + std::to_string(n) +
                                " does not match parameters " +
                                std::to_string(params.dim()));
  }
  const std::size_t heads = params.num_heads();
  const std::size_t dh = params.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  trace.input = encodings;
  trace.q.resize(heads);
  trace.k.resize(heads);
  trace.v.resize(heads);
  trace.alpha.resize(heads);
  out.fused = Matrix(k, 2 * n);
  out.attention.resize(heads);

  for (std::size_t i = 0; i < k; ++i) {
    std::copy(encodings.row(i).begin(), encodings.row(i).end(),
              out.fused.row(i).begin());
  }
  for (std::size_t h = 0; h < heads; ++h) {
    trace.q[h] = project(params.wq[h], encodings);
    trace.k[h] = project(params.wk[h], encodings);
    trace.v[h] = project(params.wv[h], encodings);
    Matrix& alpha = trace.alpha[h];
    alpha = Matrix(k, k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        alpha(i, j) = dot(trace.q[h].row(i), trace.k[h].row(j)) * scale;
      }
      softmax_inplace(alpha.row(i));
      std::span<double> dst = out.fused.row(i).subspan(n + h * dh, dh);
      for (std::size_t j = 0; j < k; ++j) {
        const double a = alpha(i, j);
        const std::span<const double> vj = trace.v[h].row(j);
        for (std::size_t d = 0; d < dh; ++d) dst[d] += a * vj[d];
      }
    }
    out.attention[h] = alpha;
  }
}

FusedBatch fuse(const Matrix& encodings, const FusionParams& params) {
  FusionTrace trace;
  FusedBatch out;
  fuse_forward(encodings, params, trace, out);
  return out;
}

FusedBatch fuse(std::span<const EncodedTable> encodings,
                const FusionParams& params) {
  return fuse(stack_encodings(encodings), params);
}

FusedBatch passthrough(const Matrix& encodings) {
  if (encodings.rows() == 0) throw std::invalid_argument("fusion: no encodings");
  FusedBatch out;
  out.fused = Matrix(encodings.rows(), 2 * encodings.cols());
  for (std::size_t i = 0; i < encodings.rows(); ++i) {
    std::copy(encodings.row(i).begin(), encodings.row(i).end(),
              out.fused.row(i).begin());
  }
  return out;
}

void fuse_backward(const FusionTrace& trace, const FusionParams& params,
                   const Matrix& upstream, FusionParams& grads,
                   Matrix& grad_inputs) {
  const std::size_t k = trace.input.rows();
  const std::size_t n = trace.input.cols();
  if (upstream.rows() != k || upstream.cols() != 2 * n) {
    throw std::invalid_argument("fusion: upstream gradient shape mismatch");
  }
  if (grad_inputs.rows() != k || grad_inputs.cols() != n) {
    throw std::invalid_argument("fusion: input gradient shape mismatch");
  }
  const std::size_t dh = params.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  for (std::size_t i = 0; i < k; ++i) {
    const std::span<const double> u = upstream.row(i).subspan(0, n);
    std::span<double> g = grad_inputs.row(i);
    for (std::size_t d = 0; d < n; ++d) g[d] += u[d];
  }

  for (std::size_t h = 0; h < params.num_heads(); ++h) {
    const Matrix& q = trace.q[h];
    const Matrix& kk = trace.k[h];
    const Matrix& v = trace.v[h];
    const Matrix& alpha = trace.alpha[h];
    Matrix g_q(k, dh), g_k(k, dh), g_v(k, dh);

    for (std::size_t i = 0; i < k; ++i) {
      const std::span<const double> g_a = upstream.row(i).subspan(n + h * dh, dh);
      std::vector<double> g_alpha(k, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        g_alpha[j] = dot(g_a, v.row(j));
        const double a = alpha(i, j);
        std::span<double> gv = g_v.row(j);
        for (std::size_t d = 0; d < dh; ++d) gv[d] += a * g_a[d];
      }
      double mean = 0.0;
      for (std::size_t j = 0; j < k; ++j) mean += alpha(i, j) * g_alpha[j];
      for (std::size_t j = 0; j < k; ++j) {
        const double g_s = alpha(i, j) * (g_alpha[j] - mean) * scale;
        if (g_s == 0.0) continue;
        std::span<double> gq = g_q.row(i);
        std::span<double> gk = g_k.row(j);
        const std::span<const double> kj = kk.row(j);
        const std::span<const double> qi = q.row(i);
        for (std::size_t d = 0; d < dh; ++d) {
          gq[d] += g_s * kj[d];
          gk[d] += g_s * qi[d];
        }
      }
    }
    for (std::size_t i = 0; i < k; ++i) {
      const std::span<const double> f = trace.input.row(i);
      outer_add(grads.wq[h], g_q.row(i), f);
      outer_add(grads.wk[h], g_k.row(i), f);
      outer_add(grads.wv[h], g_v.row(i), f);
      matvec_transpose_add(params.wq[h], g_q.row(i), grad_inputs.row(i));
      matvec_transpose_add(params.wk[h], g_k.row(i), grad_inputs.row(i));
      matvec_transpose_add(params.wv[h], g_v.row(i), grad_inputs.row(i));
    }
  }
}

FusionGradients fuse_grad(const Matrix& encodings, const FusionParams& params,
                          const Matrix& upstream) {
  FusionTrace trace;
  FusedBatch out;
  fuse_forward(encodings, params, trace, out);
  FusionGradients g{params.zeros_like(), Matrix(encodings.rows(), encodings.cols())};
  fuse_backward(trace, params, upstream, g.params, g.encodings);
  return g;
}

}  // namespace tabver
