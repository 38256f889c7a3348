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

#include "tabver/detector.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "tabver/errors.h"

namespace tabver {

std::string to_string(SuitabilityMethod method) {
  return method == SuitabilityMethod::ternary_max_relevance ? "ternary_max_relevance"
                                                            : "joint_entropy";
}

SuitabilityMethod suitability_method_from_string(std::string_view s) {
  if (s == "ternary_max_relevance" || s == "ternary") {
    return SuitabilityMethod::ternary_max_relevance;
  }
  if (s == "joint_entropy" || s == "entropy") return SuitabilityMethod::joint_entropy;
  throw ConfigError("unknown suitability method '" + std::string(s) + "'");
}

double ternary_suitability(const TernaryDistribution& dist) {
  double best = 0.0;
  for (std::size_t s = 0; s < dist.num_tables(); ++s) {
    best = std::max(best, 1.0 - dist.probs(s, kIrrelevant));
  }
  return std::clamp(best, 0.0, 1.0);
}

double joint_entropy(std::span<const double> p_s) {
  if (p_s.empty()) throw std::invalid_argument("joint_entropy: empty distribution");
  double h = 0.0;
  for (double p : p_s) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

std::vector<LabelledScore> suitability_scores(const Evaluation& evaluation,
                                              SuitabilityMethod method,
                                              std::span<const Claim> claims) {
  std::unordered_map<std::string_view, const Claim*> by_id;
  for (const Claim& c : claims) by_id.emplace(c.id, &c);
  std::vector<LabelledScore> out;
  for (const ClaimOutcome& o : evaluation.claims) {
    const auto it = by_id.find(o.claim_id);
    if (it == by_id.end() || !it->second->gold_table_id) continue;
    LabelledScore ls;
    ls.score.claim_id = o.claim_id;
    ls.score.method = method;
    ls.gold_present = o.gold_index.has_value();
    if (method == SuitabilityMethod::ternary_max_relevance) {
      if (o.prediction.per_table.cols() != 3) {
        throw ConfigError("ternary suitability needs a ternary-head checkpoint");
      }
      ls.score.score = ternary_suitability(TernaryDistribution{o.prediction.per_table});
    } else {
      ls.score.score = joint_entropy(o.prediction.p_s);
    }
    out.push_back(std::move(ls));
  }
  return out;
}

double PrCurve::interpolated_precision(double recall) const {
  double best = 0.0;
  for (const PrPoint& p : points) {
    if (p.recall >= recall) best = std::max(best, p.precision);
  }
  return best;
}

const PrPoint& PrCurve::best_f1() const {
  if (points.empty()) throw std::logic_error("best_f1 on an empty curve");
  const PrPoint* best = &points.front();
  for (const PrPoint& p : points) {
    if (p.f1() > best->f1()) best = &p;
  }
  return *best;
}

PrCurve pr_curve(std::span<const LabelledScore> scores, bool positive_is_present) {
  if (scores.empty()) throw std::invalid_argument("pr_curve: no scores");
  const SuitabilityMethod method = scores.front().score.method;
  for (const LabelledScore& s : scores) {
    if (s.score.method != method) {
      throw std::invalid_argument("pr_curve: scores mix suitability methods");
    }
  }
  // A high ternary score and a low entropy both indicate a present gold
  // table; flipping the positive class flips the direction.
  const bool higher_is_positive =
      (method == SuitabilityMethod::ternary_max_relevance) == positive_is_present;

  struct Item {
    double oriented;
    double raw;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(scores.size());
  PrCurve curve;
  curve.positive_is_present = positive_is_present;
  curve.total = scores.size();
  for (const LabelledScore& s : scores) {
    const bool positive = s.gold_present == positive_is_present;
    items.push_back({higher_is_positive ? s.score.score : -s.score.score, s.score.score,
                     positive});
    curve.positives += positive ? 1 : 0;
  }
  curve.baseline_precision =
      static_cast<double>(curve.positives) / static_cast<double>(curve.total);
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.oriented > b.oriented; });

  std::size_t tp = 0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].oriented == items[i].oriented) {
      tp += items[j].positive ? 1 : 0;
      ++j;
    }
    PrPoint p;
    p.threshold = items[i].raw;
    p.true_positives = tp;
    p.predicted_positives = j;
    p.precision = static_cast<double>(tp) / static_cast<double>(j);
    p.recall = curve.positives == 0
                   ? 0.0
                   : static_cast<double>(tp) / static_cast<double>(curve.positives);
    curve.points.push_back(p);
    i = j;
  }
  return curve;
}

PrPoint evaluate_threshold(std::span<const LabelledScore> scores, double threshold,
                           bool positive_is_present) {
  if (scores.empty()) throw std::invalid_argument("evaluate_threshold: no scores");
  const SuitabilityMethod method = scores.front().score.method;
  const bool higher_is_positive =
      (method == SuitabilityMethod::ternary_max_relevance) == positive_is_present;
  PrPoint p;
  p.threshold = threshold;
  std::size_t positives = 0;
  for (const LabelledScore& s : scores) {
    if (s.score.method != method) {
      throw std::invalid_argument("evaluate_threshold: scores mix suitability methods");
    }
    const bool positive = s.gold_present == positive_is_present;
    const bool predicted =
        higher_is_positive ? s.score.score >= threshold : s.score.score <= threshold;
    positives += positive ? 1 : 0;
    p.predicted_positives += predicted ? 1 : 0;
    p.true_positives += positive && predicted ? 1 : 0;
  }
  p.precision = p.predicted_positives == 0
                    ? 0.0
                    : static_cast<double>(p.true_positives) /
                          static_cast<double>(p.predicted_positives);
  p.recall = positives == 0 ? 0.0
                            : static_cast<double>(p.true_positives) /
                                  static_cast<double>(positives);
  return p;
}

std::string pr_curve_csv(const PrCurve& curve) {
  std::string out = "threshold,precision,recall\n";
  char buf[96];
  for (const PrPoint& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.precision,
                  p.recall);
    out += buf;
  }
  return out;
}

}  // namespace tabver
