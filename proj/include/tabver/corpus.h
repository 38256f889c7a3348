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

//! Tables, claims and their JSON Lines ingestion.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace tabver {

/// A table: the unit of retrieval and of evidence. Cell text is verbatim.
struct Table {
  std::string id;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;

  std::size_t num_columns() const { return headers.size(); }
  std::size_t num_rows() const { return rows.size(); }
  const std::string& cell(std::size_t row, std::size_t column) const {
    return rows[row][column];
  }

  bool operator==(const Table&) const = default;
};

/// Entity mention inside a claim. Offsets are UTF-8 byte offsets into the
/// claim text, `end` exclusive.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  bool operator==(const EntitySpan&) const = default;
};

struct Claim {
  std::string id;
  std::string text;
  std::vector<EntitySpan> entities;
  std::optional<std::string> gold_table_id;
  std::optional<bool> label;

  bool operator==(const Claim&) const = default;
};

/// Id-indexed, immutable-after-load table collection.
class Corpus {
 public:
  Corpus() = default;

  /// Validates and appends; throws ValidationError on invariant violation or
  /// a duplicate id.
  void add(Table table);

  const Table* find(std::string_view id) const;
  /// Throws std::out_of_range for unknown ids.
  const Table& at(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  std::span<const Table> tables() const { return tables_; }
  std::size_t size() const { return tables_.size(); }
  bool empty() const { return tables_.empty(); }

  bool operator==(const Corpus& other) const { return tables_ == other.tables_; }

 private:
  std::vector<Table> tables_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

void validate(const Table& table);
void validate(const Claim& claim);

Table table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Table& table);
Claim claim_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Claim& claim);

Corpus load_tables(const std::filesystem::path& path);
std::vector<Claim> load_claims(const std::filesystem::path& path);
void save_tables(const Corpus& corpus, const std::filesystem::path& path);
void save_claims(std::span<const Claim> claims,
                 const std::filesystem::path& path);

/// Gold ids that do not resolve against `corpus`, one message per claim.
/// Dangling ids are warnings: claims and corpus load independently.
std::vector<std::string> resolve_gold(std::span<const Claim> claims,
                                      const Corpus& corpus);

}  // namespace tabver
