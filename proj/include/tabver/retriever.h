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

//! Entity-based table retrieval over a per-cell TF-IDF index.
//!
//! Every non-empty cell of every table is one document. A claim entity is
//! vectorized with the same idf table and a table's score is the sum over
//! entities of the entity's best cosine against any cell of the table:
//!
//!   score(q, t) = sum_i max_j z(e_i) . z(c_j)
//!
//! Weights are raw term frequency times the smoothed idf
//! ln((N + 1) / (df + 1)) + 1, then L2-normalized, so identical strings
//! score exactly 1.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tabver/corpus.h"

namespace tabver {

enum class TokenUnit { char_gram, word, word_gram };
enum class Strategy { entity_level, query_level, exact_match };

std::string to_string(TokenUnit unit);
std::string to_string(Strategy strategy);
TokenUnit token_unit_from_string(std::string_view s);
Strategy strategy_from_string(std::string_view s);

struct IndexConfig {
  std::vector<int> gram_orders{2, 3};  // sorted, unique, positive
  TokenUnit unit = TokenUnit::char_gram;
  Strategy strategy = Strategy::entity_level;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static IndexConfig from_json(const nlohmann::json& j);
  /// Stable fingerprint of the canonical JSON form.
  std::uint64_t fingerprint() const;

  bool operator==(const IndexConfig&) const = default;
};

/// Named retrieval strategies: entity_char23 (default), entity_char123,
/// entity_word, entity_exact, query_word, query_char23.
std::optional<IndexConfig> strategy_preset(std::string_view name);
std::vector<std::string> strategy_preset_names();

/// Normalizes `text` then enumerates tokens for the configured unit.
std::vector<std::string> tokenize(std::string_view text,
                                  const IndexConfig& config);

/// Sparse vector sorted by gram id.
struct TfIdfVector {
  std::vector<std::pair<std::uint64_t, double>> entries;

  bool empty() const { return entries.empty(); }
  double norm() const;
  bool operator==(const TfIdfVector&) const = default;
};

/// Merge-join over sorted ids; sums products in ascending id order.
double dot(const TfIdfVector& a, const TfIdfVector& b);

/// Best-matching cell of one entity in one table. `column == -1` means the
/// entity matched no cell of the table with positive score.
struct CellMatch {
  int column = -1;
  int row = -1;
  double score = 0.0;

  bool matched() const { return column >= 0; }
  bool operator==(const CellMatch&) const = default;
};

struct ScoredTable {
  std::string table_id;
  double score = 0.0;
  std::vector<CellMatch> per_entity_best;
};

struct IndexedCell {
  std::uint32_t row = 0;
  std::uint32_t column = 0;
  std::uint64_t exact_key = 0;  // gram_hash of the normalized cell text
  TfIdfVector vector;
};

struct IndexedTable {
  std::string id;
  std::uint32_t num_rows = 0;
  std::uint32_t num_columns = 0;
  std::vector<IndexedCell> cells;  // documents only, row-major order
};

class CellIndex {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  /// Throws ValidationError on an empty corpus or one without any
  /// indexable cell. `threads == 0` picks hardware concurrency.
  static CellIndex build(const Corpus& corpus, const IndexConfig& config,
                         unsigned threads = 0);

  const IndexConfig& config() const { return config_; }
  std::size_t doc_count() const { return cell_table_.size(); }
  std::size_t num_tables() const { return tables_.size(); }
  std::span<const IndexedTable> tables() const { return tables_; }
  const IndexedTable* find_table(std::string_view id) const;

  /// Idf of an indexed gram; nullopt for grams absent from every cell.
  std::optional<double> idf(std::uint64_t gram) const;
  /// Idf with df = 0 for grams absent from the index.
  double idf_or_unseen(std::uint64_t gram) const;
  std::size_t vocabulary_size() const { return idf_.size(); }

  TfIdfVector vectorize(std::string_view text) const;

  /// Texts scored against cells: entity surfaces, or the whole claim text
  /// under query_level.
  std::vector<std::string> query_units(const Claim& claim) const;

  /// Throws std::out_of_range for an unknown table id.
  ScoredTable score_table(const Claim& claim, std::string_view table_id) const;

  /// Sorted by score descending, ties by table id ascending;
  /// length min(k, num_tables()). Throws std::invalid_argument for k == 0.
  std::vector<ScoredTable> retrieve_topk(const Claim& claim,
                                         std::size_t k) const;

  /// retrieve_topk for every claim, parallel across claims; output order
  /// follows input order.
  std::vector<std::vector<ScoredTable>> retrieve_all(
      std::span<const Claim> claims, std::size_t k, unsigned threads = 0) const;

  /// Free-form text stored alongside the index (the CLI records the run
  /// configuration hash here).
  const std::string& metadata() const { return metadata_; }
  void set_metadata(std::string metadata) { metadata_ = std::move(metadata); }

  void save(const std::filesystem::path& path) const;
  static CellIndex load(const std::filesystem::path& path);

 private:
  struct Posting {
    std::uint32_t cell;  // global document ordinal
    double weight;
  };

  void finalize();
  ScoredTable make_scored(std::size_t table_index, double score,
                          std::vector<CellMatch> per_entity) const;

  IndexConfig config_;
  std::string metadata_;
  std::vector<IndexedTable> tables_;
  std::unordered_map<std::string, std::size_t> table_by_id_;
  std::vector<std::uint32_t> id_rank_;         // table index -> rank by id
  std::vector<std::uint32_t> tables_by_id_;    // rank by id -> table index
  std::unordered_map<std::uint64_t, double> idf_;

  // Document ordinal -> (table index, local cell index).
  std::vector<std::uint32_t> cell_table_;
  std::vector<std::uint32_t> cell_local_;

  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>>
      posting_range_;
  std::vector<Posting> postings_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> exact_postings_;
};

inline CellIndex build_index(const Corpus& corpus, const IndexConfig& config) {
  return CellIndex::build(corpus, config);
}
inline ScoredTable score_table(const Claim& claim, std::string_view table_id,
                               const CellIndex& index) {
  return index.score_table(claim, table_id);
}
inline std::vector<ScoredTable> retrieve_topk(const Claim& claim,
                                              const CellIndex& index,
                                              std::size_t k) {
  return index.retrieve_topk(claim, k);
}

}  // namespace tabver
