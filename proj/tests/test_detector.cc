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

#include <algorithm>
#include <cmath>
#include <set>

#include "tabver/detector.h"
#include "tabver/errors.h"

using namespace tabver;

namespace {

LabelledScore labelled(double score, bool present,
                       SuitabilityMethod m = SuitabilityMethod::ternary_max_relevance) {
  return {{"c", score, m}, present};
}

TernaryDistribution ternary_rows(std::initializer_list<std::array<double, 3>> rows) {
  TernaryDistribution d{Matrix(rows.size(), 3)};
  std::size_t r = 0;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 3; ++c) d.probs(r, c) = row[c];
    ++r;
  }
  return d;
}

// Exhaustive threshold sweep, written without sorting tricks.
double brute_best_f1(const std::vector<LabelledScore>& s, bool high_is_positive) {
  std::size_t positives = 0;
  for (const auto& x : s) positives += x.gold_present ? 1 : 0;
  std::set<double> thresholds;
  for (const auto& x : s) thresholds.insert(x.score.score);
  double best = 0.0;
  for (double t : thresholds) {
    std::size_t tp = 0, pp = 0;
    for (const auto& x : s) {
      const bool predicted = high_is_positive ? x.score.score >= t : x.score.score <= t;
      if (predicted) {
        ++pp;
        tp += x.gold_present ? 1 : 0;
      }
    }
    const double p = pp ? static_cast<double>(tp) / pp : 0.0;
    const double r = positives ? static_cast<double>(tp) / positives : 0.0;
    if (p + r > 0.0) best = std::max(best, 2 * p * r / (p + r));
  }
  return best;
}

}  // namespace

TEST_SUITE("detector") {
  TEST_CASE("ternary suitability") {
    CHECK(ternary_suitability(ternary_rows({{0.2, 0.3, 0.5}, {0.6, 0.4, 0.0}})) == 1.0);
    CHECK(ternary_suitability(ternary_rows({{0, 0, 1}, {0, 0, 1}, {0, 0, 1}})) == 0.0);
    const auto d = ternary_rows({{0.1, 0.2, 0.7}, {0.3, 0.1, 0.6}, {0.05, 0.05, 0.9}});
    CHECK(ternary_suitability(d) == doctest::Approx(0.4).epsilon(1e-15));
  }

  TEST_CASE("joint entropy") {
    const std::vector<double> one_hot{0.0, 1.0, 0.0};
    CHECK(joint_entropy(one_hot) == 0.0);
    const std::vector<double> uniform(5, 0.2);
    CHECK(joint_entropy(uniform) == doctest::Approx(std::log(5.0)).epsilon(1e-15));
    CHECK(joint_entropy(uniform) == doctest::Approx(1.609).epsilon(1e-3));
    const std::vector<double> hand{0.5, 0.25, 0.25};
    CHECK(joint_entropy(hand) == doctest::Approx(1.0397).epsilon(1e-4));
    CHECK(joint_entropy(hand) == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(joint_entropy(std::vector<double>{}), std::invalid_argument);
  }

  TEST_CASE("entropy stays within its bounds") {
    Rng rng(3);
    for (int draw = 0; draw < 500; ++draw) {
      const std::size_t k = 1 + rng.index(8);
      std::vector<double> p(k);
      double z = 0;
      for (double& v : p) z += v = rng.uniform();
      for (double& v : p) v /= z;
      const double h = joint_entropy(p);
      CHECK(h >= 0.0);
      CHECK(h <= std::log(static_cast<double>(k)) + 1e-12);
    }
  }

  TEST_CASE("a permissive threshold recalls everything") {
    const std::vector<LabelledScore> s{labelled(0.9, true), labelled(0.4, false),
                                       labelled(0.7, true), labelled(0.1, false),
                                       labelled(0.3, true)};
    const PrCurve c = pr_curve(s);
    REQUIRE(c.points.size() == 5);
    CHECK(c.points.back().recall == 1.0);
    CHECK(c.points.back().precision == doctest::Approx(0.6));
    CHECK(c.baseline_precision == doctest::Approx(0.6));
    CHECK(c.positives == 3);
    CHECK(c.total == 5);
    CHECK(c.points.front().threshold == 0.9);
    // threshold 0.3: predicted {0.9, 0.7, 0.4, 0.3}, three of them gold.
    CHECK(c.points[3].threshold == 0.3);
    CHECK(c.points[3].precision == doctest::Approx(0.75));
    CHECK(c.interpolated_precision(0.5) == 1.0);
    CHECK(c.interpolated_precision(1.0) == doctest::Approx(0.75));
  }

  TEST_CASE("separable scores reach perfect precision and recall") {
    const std::vector<LabelledScore> s{labelled(0.9, true), labelled(0.8, true),
                                       labelled(0.2, false), labelled(0.1, false)};
    const PrCurve c = pr_curve(s);
    const auto& best = c.best_f1();
    CHECK(best.precision == 1.0);
    CHECK(best.recall == 1.0);
    CHECK(best.threshold == 0.8);
  }

  TEST_CASE("entropy scores are predicted positive when low") {
    const auto m = SuitabilityMethod::joint_entropy;
    const std::vector<LabelledScore> s{labelled(0.1, true, m), labelled(0.2, true, m),
                                       labelled(1.0, false, m)};
    const PrCurve c = pr_curve(s);
    CHECK(c.points.front().threshold == 0.1);
    CHECK(c.best_f1().threshold == 0.2);
    CHECK(c.best_f1().f1() == 1.0);
    const PrPoint p = evaluate_threshold(s, 0.5);
    CHECK(p.predicted_positives == 2);
    CHECK(p.precision == 1.0);
  }

  TEST_CASE("ties share a single step") {
    const std::vector<LabelledScore> s{labelled(0.5, true), labelled(0.5, false),
                                       labelled(0.5, true), labelled(0.2, false)};
    const PrCurve c = pr_curve(s);
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[0].predicted_positives == 3);
    CHECK(c.points[0].true_positives == 2);
  }

  TEST_CASE("the positive class can be flipped") {
    const std::vector<LabelledScore> s{labelled(0.9, true), labelled(0.2, false),
                                       labelled(0.1, false), labelled(0.6, true)};
    const PrCurve c = pr_curve(s, false);
    CHECK_FALSE(c.positive_is_present);
    CHECK(c.positives == 2);
    // Low suitability predicts an absent gold table.
    CHECK(c.points.front().threshold == 0.1);
    CHECK(c.best_f1().threshold == 0.2);
    CHECK(c.best_f1().f1() == 1.0);
  }

  TEST_CASE("invalid input") {
    CHECK_THROWS_AS(pr_curve(std::vector<LabelledScore>{}), std::invalid_argument);
    const std::vector<LabelledScore> mixed{
        labelled(0.1, true), labelled(0.2, false, SuitabilityMethod::joint_entropy)};
    CHECK_THROWS_AS(pr_curve(mixed), std::invalid_argument);
    CHECK_THROWS_AS(PrCurve{}.best_f1(), std::logic_error);
    CHECK(suitability_method_from_string("joint_entropy") == SuitabilityMethod::joint_entropy);
    CHECK_THROWS_AS(suitability_method_from_string("margin"), ConfigError);
  }

  TEST_CASE("curves agree with a brute-force sweep") {
    Rng rng(17);
    for (int trial = 0; trial < 300; ++trial) {
      const bool entropy = trial % 2 == 1;
      const auto method =
          entropy ? SuitabilityMethod::joint_entropy : SuitabilityMethod::ternary_max_relevance;
      std::vector<LabelledScore> s;
      const std::size_t n = 2 + rng.index(30);
      for (std::size_t i = 0; i < n; ++i) {
        // Coarse scores to force ties.
        const double score = static_cast<double>(rng.index(8)) / 8.0;
        s.push_back(labelled(score, rng.uniform() < 0.6, method));
      }
      s[0].gold_present = true;
      const PrCurve c = pr_curve(s);
      CHECK(c.best_f1().f1() == doctest::Approx(brute_best_f1(s, !entropy)).epsilon(1e-12));
      for (const PrPoint& p : c.points) {
        const PrPoint direct = evaluate_threshold(s, p.threshold);
        CHECK(direct.precision == p.precision);
        CHECK(direct.recall == p.recall);
      }
      for (std::size_t i = 1; i < c.points.size(); ++i) {
        CHECK(c.points[i].recall >= c.points[i - 1].recall);
      }

      // A positive scored more suitable than everything else.
      LabelledScore extra = labelled(entropy ? -1.0 : 2.0, true, method);
      s.push_back(extra);
      CHECK(pr_curve(s).best_f1().f1() >= c.best_f1().f1() - 1e-12);
    }
  }
}
