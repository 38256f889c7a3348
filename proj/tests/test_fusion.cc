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

#include <doctest.h>

#include <cmath>

#include "oracles.h"
#include "tabver/fusion.h"

using namespace tabver;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double bound = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
  return m;
}

std::vector<std::vector<double>> rows_of(const Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

std::vector<TensorRef> tensors_of(FusionParams& p) {
  std::vector<TensorRef> out;
  p.append_tensors(out);
  return out;
}

}  // namespace

TEST_SUITE("fusion") {
  TEST_CASE("a single table attends to itself") {
    Rng rng(1);
    const FusionParams p = FusionParams::init(4, 2, rng);
    const Matrix f = random_matrix(1, 4, rng);
    const FusedBatch out = fuse(f, p);
    REQUIRE(out.attention.size() == 2);
    for (const Matrix& a : out.attention) CHECK(a(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    // a = W_V f, head by head, after the untouched input.
    for (std::size_t h = 0; h < 2; ++h) {
      for (std::size_t r = 0; r < 2; ++r) {
        double expect = 0.0;
        for (std::size_t c = 0; c < 4; ++c) expect += p.wv[h](r, c) * f(0, c);
        CHECK(out.fused(0, 4 + h * 2 + r) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
    for (std::size_t c = 0; c < 4; ++c) CHECK(out.fused(0, c) == f(0, c));
  }

  TEST_CASE("identical encodings give uniform attention") {
    Rng rng(2);
    const FusionParams p = FusionParams::init(6, 3, rng);
    Matrix f(4, 6);
    const Matrix one = random_matrix(1, 6, rng);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t c = 0; c < 6; ++c) f(i, c) = one(0, c);
    }
    for (const Matrix& a : fuse(f, p).attention) {
      for (double v : a.values()) CHECK(std::abs(v - 0.25) < 1e-12);
    }
  }

  TEST_CASE("matches the dense transcription") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      const std::size_t heads = seed % 2 == 0 ? 1 : 2;
      const FusionParams p = FusionParams::init(4, heads, rng);
      const Matrix f = random_matrix(3, 4, rng, 2.0);
      const FusedBatch out = fuse(f, p);
      const oracle::DenseFusion ref = oracle::dense_fuse(rows_of(f), p);
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t c = 0; c < 8; ++c) CHECK(std::abs(out.fused(i, c) - ref.fused[i][c]) < 1e-9);
      }
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < 3; ++i) {
          for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(out.attention[h](i, j) - ref.alpha[h][i][j]) < 1e-9);
          }
        }
      }
    }
  }

  TEST_CASE("attention rows are stochastic") {
    Rng rng(3);
    for (int draw = 0; draw < 200; ++draw) {
      const std::size_t k = 1 + rng.index(6);
      const std::size_t head_choices[] = {1, 2, 4};
      const FusionParams p = FusionParams::init(8, head_choices[rng.index(3)], rng);
      const FusedBatch out = fuse(random_matrix(k, 8, rng, 3.0), p);
      for (const Matrix& a : out.attention) {
        for (std::size_t i = 0; i < k; ++i) {
          double s = 0.0;
          for (double v : a.row(i)) {
            CHECK(v >= 0.0);
            s += v;
          }
          CHECK(std::abs(s - 1.0) < 1e-9);
        }
      }
    }
  }

  TEST_CASE("the no-attention variant pads with zeros") {
    Rng rng(4);
    const Matrix f = random_matrix(3, 4, rng);
    const FusedBatch out = passthrough(f);
    CHECK(out.fused.cols() == 8);
    CHECK(out.attention.empty());
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t c = 0; c < 4; ++c) {
        CHECK(out.fused(i, c) == f(i, c));
        CHECK(out.fused(i, 4 + c) == 0.0);
      }
    }
  }

  TEST_CASE("head count must divide the width") {
    Rng rng(5);
    CHECK_THROWS_AS(FusionParams::init(6, 4, rng), std::invalid_argument);
    CHECK_THROWS_AS(FusionParams::init(6, 0, rng), std::invalid_argument);
    CHECK(FusionParams::init(6, 3, rng).head_dim() == 2);
  }

  TEST_CASE("ragged encodings are rejected") {
    std::vector<EncodedTable> e(2);
    e[0].vector = {1.0, 2.0};
    e[1].vector = {1.0};
    CHECK_THROWS(stack_encodings(e));
  }

  TEST_CASE("analytic gradients match central differences") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      Rng rng(seed * 31);
      const std::size_t k = 1 + seed % 4;
      const std::size_t heads = seed % 3 == 0 ? 1 : 2;
      FusionParams p = FusionParams::init(4, heads, rng);
      oracle::randomize(tensors_of(p), 1.0, rng);
      Matrix f = random_matrix(k, 4, rng, 1.5);
      const Matrix upstream = random_matrix(k, 8, rng);

      auto objective = [&] {
        const FusedBatch out = fuse(f, p);
        double s = 0.0;
        for (std::size_t i = 0; i < out.fused.size(); ++i) {
          s += out.fused.values()[i] * upstream.values()[i];
        }
        return s;
      };
      FusionGradients g = fuse_grad(f, p, upstream);
      std::vector<TensorRef> params = tensors_of(p);
      params.push_back({"encodings", f.values()});
      std::vector<TensorRef> analytic = tensors_of(g.params);
      analytic.push_back({"encodings", g.encodings.values()});

      const auto result = oracle::check_gradients(objective, params, analytic);
      CAPTURE(seed);
      CAPTURE(result.worst);
      CHECK(result.max_rel_error < 1e-4);
    }
  }
}
