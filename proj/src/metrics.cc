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

#include "tabver/metrics.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "tabver/errors.h"

namespace tabver {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(RankBucket bucket) {
  switch (bucket) {
    case RankBucket::rank1: return "rank1";
    case RankBucket::rank2_3: return "rank2_3";
    case RankBucket::rank4_5: return "rank4_5";
    case RankBucket::beyond: return "beyond";
  }
  return "unknown";
}

RankBucket bucket_for_rank(std::optional<std::size_t> rank) {
  if (!rank || *rank == 0 || *rank > 5) return RankBucket::beyond;
  if (*rank == 1) return RankBucket::rank1;
  if (*rank <= 3) return RankBucket::rank2_3;
  return RankBucket::rank4_5;
}

std::optional<std::size_t> gold_rank(const Claim& claim,
                                     std::span<const ScoredTable> ranking) {
  if (!claim.gold_table_id) return std::nullopt;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (ranking[r].table_id == *claim.gold_table_id) return r + 1;
  }
  return std::nullopt;
}

std::vector<RankBucket> bucketize_by_gold_rank(
    std::span<const Claim> claims, std::span<const std::vector<ScoredTable>> rankings) {
  if (claims.size() != rankings.size()) {
    throw std::invalid_argument("bucketize_by_gold_rank: claims and rankings differ in length");
  }
  std::vector<RankBucket> out;
  out.reserve(claims.size());
  for (std::size_t i = 0; i < claims.size(); ++i) {
    out.push_back(bucket_for_rank(gold_rank(claims[i], rankings[i])));
  }
  return out;
}

std::map<std::size_t, double> hits_at_k(std::span<const Claim> claims,
                                        std::span<const std::vector<ScoredTable>> rankings,
                                        std::span<const std::size_t> ks) {
  if (claims.size() != rankings.size()) {
    throw std::invalid_argument("hits_at_k: claims and rankings differ in length");
  }
  if (claims.empty()) throw std::invalid_argument("hits_at_k: no claims");
  std::vector<std::optional<std::size_t>> ranks;
  ranks.reserve(claims.size());
  for (std::size_t i = 0; i < claims.size(); ++i) {
    if (!claims[i].gold_table_id) {
      throw ValidationError("claim '" + claims[i].id + "' has no gold table");
    }
    ranks.push_back(gold_rank(claims[i], rankings[i]));
  }
  std::map<std::size_t, double> out;
  for (std::size_t k : ks) {
    if (k == 0) throw std::invalid_argument("hits_at_k: k must be positive");
    std::size_t hits = 0;
    for (const auto& r : ranks) hits += r && *r <= k ? 1 : 0;
    out[k] = static_cast<double>(hits) / static_cast<double>(claims.size());
  }
  return out;
}

std::map<std::size_t, double> reranked_hits_at_k(const Evaluation& evaluation,
                                                 std::span<const std::size_t> ks) {
  std::map<std::size_t, double> out;
  if (evaluation.claims.empty()) return out;
  std::vector<std::optional<std::size_t>> ranks;
  for (const ClaimOutcome& c : evaluation.claims) {
    if (!c.gold_index) {
      ranks.emplace_back();
      continue;
    }
    const std::vector<double>& p = c.prediction.p_s;
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    const auto it = std::find(order.begin(), order.end(), *c.gold_index);
    ranks.emplace_back(static_cast<std::size_t>(it - order.begin()) + 1);
  }
  for (std::size_t k : ks) {
    std::size_t hits = 0;
    for (const auto& r : ranks) hits += r && *r <= k ? 1 : 0;
    out[k] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return out;
}

MetricsReport make_report(const Evaluation& evaluation, std::span<const std::size_t> ks) {
  MetricsReport r;
  r.evaluated = evaluation.claims.size();
  r.accuracy = evaluation.accuracy;
  for (RankBucket b : kRankBuckets) r.bucket_counts[b] = 0;
  std::map<RankBucket, std::size_t> correct;
  for (const ClaimOutcome& c : evaluation.claims) {
    const RankBucket b = bucket_for_rank(c.gold_rank);
    ++r.bucket_counts[b];
    correct[b] += c.correct ? 1 : 0;
  }
  for (RankBucket b : kRankBuckets) {
    if (r.bucket_counts[b] > 0) {
      r.bucket_accuracy[b] =
          static_cast<double>(correct[b]) / static_cast<double>(r.bucket_counts[b]);
    }
  }
  if (r.evaluated > 0) {
    for (std::size_t k : ks) {
      if (k == 0 || k > kRankDepth) continue;
      std::size_t hits = 0;
      for (const ClaimOutcome& c : evaluation.claims) {
        hits += c.gold_rank && *c.gold_rank <= k ? 1 : 0;
      }
      r.hits_at[k] = static_cast<double>(hits) / static_cast<double>(r.evaluated);
    }
  }
  r.rerank_hits_at = reranked_hits_at_k(evaluation, ks);
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["evaluated"] = evaluated;
  j["accuracy"] = accuracy;
  j["hits_at"] = nlohmann::json::object();
  for (const auto& [k, v] : hits_at) j["hits_at"][std::to_string(k)] = v;
  j["rerank_hits_at"] = nlohmann::json::object();
  for (const auto& [k, v] : rerank_hits_at) j["rerank_hits_at"][std::to_string(k)] = v;
  j["buckets"] = nlohmann::json::object();
  for (RankBucket b : kRankBuckets) {
    const auto count = bucket_counts.find(b);
    const auto acc = bucket_accuracy.find(b);
    j["buckets"][to_string(b)] = {
        {"count", count == bucket_counts.end() ? 0 : count->second},
        {"accuracy", acc == bucket_accuracy.end() ? nlohmann::json() : nlohmann::json(acc->second)}};
  }
  return j;
}

std::string MetricsReport::to_csv() const {
  std::string out = "metric,value\n";
  out += "evaluated," + std::to_string(evaluated) + "\n";
  out += "accuracy," + format_double(accuracy) + "\n";
  for (const auto& [k, v] : hits_at) out += "hits@" + std::to_string(k) + "," + format_double(v) + "\n";
  for (const auto& [k, v] : rerank_hits_at) {
    out += "rerank_hits@" + std::to_string(k) + "," + format_double(v) + "\n";
  }
  for (RankBucket b : kRankBuckets) {
    const auto count = bucket_counts.find(b);
    out += "count_" + to_string(b) + "," +
           std::to_string(count == bucket_counts.end() ? 0 : count->second) + "\n";
    const auto acc = bucket_accuracy.find(b);
    if (acc != bucket_accuracy.end()) {
      out += "accuracy_" + to_string(b) + "," + format_double(acc->second) + "\n";
    }
  }
  return out;
}

AttentionSummary attention_summary(std::span<const std::vector<Matrix>> per_claim,
                                   std::span<const RankBucket> buckets) {
  if (per_claim.size() != buckets.size()) {
    throw std::invalid_argument("attention_summary: attention and buckets differ in length");
  }
  AttentionSummary s;
  if (per_claim.empty()) return s;
  s.num_heads = per_claim.front().size();
  if (s.num_heads == 0) throw std::invalid_argument("attention_summary: claim without attention");
  s.k = per_claim.front().front().rows();
  s.mean.resize(s.num_heads);
  for (std::size_t i = 0; i < per_claim.size(); ++i) {
    const std::vector<Matrix>& heads = per_claim[i];
    if (heads.size() != s.num_heads) {
      throw std::invalid_argument("attention_summary: claims differ in head count");
    }
    for (std::size_t h = 0; h < s.num_heads; ++h) {
      if (heads[h].rows() != s.k || heads[h].cols() != s.k) {
        throw std::invalid_argument("attention_summary: attention matrices differ in shape");
      }
      auto [it, inserted] = s.mean[h].try_emplace(buckets[i], s.k, s.k);
      std::span<double> acc = it->second.values();
      const std::span<const double> a = heads[h].values();
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += a[j];
    }
    ++s.counts[buckets[i]];
  }
  for (std::size_t h = 0; h < s.num_heads; ++h) {
    for (auto& [bucket, m] : s.mean[h]) {
      const double inv = 1.0 / static_cast<double>(s.counts[bucket]);
      for (double& v : m.values()) v *= inv;
    }
  }
  return s;
}

std::string AttentionSummary::to_csv() const {
  std::string out = "head,bucket,row";
  for (std::size_t c = 0; c < k; ++c) out += ",c" + std::to_string(c);
  out += "\n";
  for (std::size_t h = 0; h < mean.size(); ++h) {
    for (const auto& [bucket, m] : mean[h]) {
      for (std::size_t r = 0; r < m.rows(); ++r) {
        out += std::to_string(h) + "," + to_string(bucket) + "," + std::to_string(r);
        for (std::size_t c = 0; c < m.cols(); ++c) out += "," + format_double(m(r, c));
        out += "\n";
      }
    }
  }
  return out;
}

}  // namespace tabver
