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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabver/corpus.h"
#include "tabver/retriever.h"

namespace tabver {

inline constexpr std::size_t kMaxKeptColumns = 3;
inline constexpr const char* kClaimSeparator = " </s> ";

/// Claim-prefixed flattening of a column-restricted table.
struct Linearisation {
  std::string text;
  std::vector<std::size_t> kept_columns;
  std::string source_table_id;
};

/// Up to three columns ranked by the best per-entity cell score reached in
/// each column, returned in left-to-right order. Ties prefer the leftmost
/// column, so a table nothing matched keeps its leftmost columns.
std::vector<std::size_t> select_columns(const ScoredTable& scored,
                                        const Table& table);

/// "<claim> </s> row 1 is : h1 is c1 ; h2 is c2 . row 2 is : ..."
/// `max_rows` caps the number of rows emitted (nullopt = all rows).
Linearisation linearize(const Claim& claim, const Table& table,
                        std::span<const std::size_t> kept,
                        std::optional<std::size_t> max_rows = std::nullopt);

}  // namespace tabver
