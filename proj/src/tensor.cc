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

#include "tabver/tensor.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>
#include <sstream>

namespace tabver {

void matvec(const Matrix& w, std::span<const double> x, std::span<double> y) {
  assert(x.size() == w.cols() && y.size() == w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const std::span<const double> row = w.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * x[c];
    y[r] = s;
  }
}

void matvec_transpose_add(const Matrix& w, std::span<const double> g,
                          std::span<double> x_grad) {
  assert(g.size() == w.rows() && x_grad.size() == w.cols());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const std::span<const double> row = w.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) x_grad[c] += gr * row[c];
  }
}

void outer_add(Matrix& grad, std::span<const double> g, std::span<const double> x) {
  assert(g.size() == grad.rows() && x.size() == grad.cols());
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    std::span<double> row = grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += gr * x[c];
  }
}

void softmax_inplace(std::span<double> v) {
  if (v.empty()) return;
  const double m = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    z += x;
  }
  for (double& x : v) x /= z;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::size_t Rng::index(std::size_t n) {
  // Lemire's multiply-shift with rejection: unbiased and portable.
  const std::uint64_t range = n;
  std::uint64_t x = engine_();
  __uint128_t m = static_cast<__uint128_t>(x) * range;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = -range % range;
    while (low < threshold) {
      x = engine_();
      m = static_cast<__uint128_t>(x) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::set_state(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
}

void fill_uniform(std::span<double> v, double bound, Rng& rng) {
  for (double& x : v) x = rng.uniform(-bound, bound);
}

void Dropout::sample(std::span<double> mask) {
  const double keep_scale = 1.0 / (1.0 - rate_);
  for (double& m : mask) m = rng_->uniform() < rate_ ? 0.0 : keep_scale;
}

}  // namespace tabver
