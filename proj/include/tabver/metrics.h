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

//! Retrieval and verification metrics.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabver/corpus.h"
#include "tabver/retriever.h"
#include "tabver/tensor.h"
#include "tabver/trainer.h"

namespace tabver {

enum class RankBucket { rank1, rank2_3, rank4_5, beyond };
inline constexpr std::array<RankBucket, 4> kRankBuckets = {
    RankBucket::rank1, RankBucket::rank2_3, RankBucket::rank4_5, RankBucket::beyond};

std::string to_string(RankBucket bucket);
/// 1 -> rank1, 2-3 -> rank2_3, 4-5 -> rank4_5, deeper or absent -> beyond.
RankBucket bucket_for_rank(std::optional<std::size_t> rank);

/// 1-based position of the claim's gold table in `ranking`.
std::optional<std::size_t> gold_rank(const Claim& claim,
                                     std::span<const ScoredTable> ranking);

/// Throws std::invalid_argument when the spans differ in length.
std::vector<RankBucket> bucketize_by_gold_rank(
    std::span<const Claim> claims, std::span<const std::vector<ScoredTable>> rankings);

/// Fraction of claims whose gold table is ranked within the top k, for each
/// k in `ks`. Throws ValidationError for a claim without a gold table and
/// std::invalid_argument for empty or mismatched input.
std::map<std::size_t, double> hits_at_k(std::span<const Claim> claims,
                                        std::span<const std::vector<ScoredTable>> rankings,
                                        std::span<const std::size_t> ks);

/// Hits@k after reordering each claim's tables by descending p_s, ties kept in
/// retrieval order. A claim whose gold table was not retrieved is a miss.
std::map<std::size_t, double> reranked_hits_at_k(const Evaluation& evaluation,
                                                 std::span<const std::size_t> ks);

struct MetricsReport {
  std::size_t evaluated = 0;
  double accuracy = 0.0;
  std::map<std::size_t, double> hits_at;         // retrieval order
  std::map<std::size_t, double> rerank_hits_at;  // model order
  std::map<RankBucket, std::size_t> bucket_counts;
  std::map<RankBucket, double> bucket_accuracy;  // non-empty buckets only

  nlohmann::json to_json() const;
  /// "metric,value" rows.
  std::string to_csv() const;
};

/// ks larger than the rank depth of the evaluation are dropped from hits_at.
MetricsReport make_report(const Evaluation& evaluation,
                          std::span<const std::size_t> ks = std::array<std::size_t, 3>{1, 3, 5});

struct AttentionSummary {
  std::size_t num_heads = 0;
  std::size_t k = 0;
  /// mean[h][bucket] is the element-wise mean attention matrix.
  std::vector<std::map<RankBucket, Matrix>> mean;
  std::map<RankBucket, std::size_t> counts;

  /// "head,bucket,row,c0,...,c{k-1}".
  std::string to_csv() const;
};

/// Throws std::invalid_argument for mismatched lengths, claims without
/// attention, or differing head counts or shapes.
AttentionSummary attention_summary(std::span<const std::vector<Matrix>> per_claim,
                                   std::span<const RankBucket> buckets);

}  // namespace tabver
