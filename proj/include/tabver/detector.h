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

//! Insufficient-evidence detection: does the retrieved set contain the
//! gold table?
//!
//! Two suitability scores are supported. The ternary score is the largest
//! relevance mass 1 - p(irrelevant) over the retrieved tables; high means
//! suitable. The joint score is the entropy of the rerank marginal; low
//! means suitable. Curves are swept over every distinct score.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabver/heads.h"
#include "tabver/trainer.h"

namespace tabver {

enum class SuitabilityMethod { ternary_max_relevance, joint_entropy };

std::string to_string(SuitabilityMethod method);
SuitabilityMethod suitability_method_from_string(std::string_view s);

struct SuitabilityScore {
  std::string claim_id;
  double score = 0.0;
  SuitabilityMethod method = SuitabilityMethod::ternary_max_relevance;
};

/// max_t (1 - p(irrelevant | t)), in [0, 1].
double ternary_suitability(const TernaryDistribution& dist);
/// -sum p ln p with 0 ln 0 = 0. Throws std::invalid_argument on an empty
/// vector.
double joint_entropy(std::span<const double> p_s);

struct LabelledScore {
  SuitabilityScore score;
  bool gold_present = false;
};

/// One score per evaluated claim that has a gold table; gold_present
/// records whether retrieval found it. The ternary method needs a ternary
/// checkpoint; throws ConfigError otherwise.
std::vector<LabelledScore> suitability_scores(const Evaluation& evaluation,
                                              SuitabilityMethod method,
                                              std::span<const Claim> claims);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t true_positives = 0;
  std::size_t predicted_positives = 0;

  double f1() const {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                    : 0.0;
  }
};

struct PrCurve {
  /// Ordered from the strictest threshold to the most permissive. A claim
  /// is predicted positive at a point when its score is at least the
  /// threshold (ternary) or at most the threshold (entropy).
  std::vector<PrPoint> points;
  /// Precision of predicting the positive class for every claim.
  double baseline_precision = 0.0;
  std::size_t positives = 0;
  std::size_t total = 0;
  /// Positive class: gold table present (default) or absent.
  bool positive_is_present = true;

  /// Largest precision among points with recall >= `recall`; 0 if none.
  double interpolated_precision(double recall) const;
  /// The point with the largest F1, earliest on ties. Throws
  /// std::logic_error on an empty curve.
  const PrPoint& best_f1() const;
};

/// Throws std::invalid_argument for empty input or mixed methods. Scores
/// that tie are grouped into a single point.
PrCurve pr_curve(std::span<const LabelledScore> scores,
                 bool positive_is_present = true);

/// Precision and recall of a fixed threshold, oriented as in pr_curve.
PrPoint evaluate_threshold(std::span<const LabelledScore> scores, double threshold,
                           bool positive_is_present = true);

/// "threshold,precision,recall" with one row per point.
std::string pr_curve_csv(const PrCurve& curve);

}  // namespace tabver
