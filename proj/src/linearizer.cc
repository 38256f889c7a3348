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

#include "tabver/linearizer.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tabver {

std::vector<std::size_t> select_columns(const ScoredTable& scored,
                                        const Table& table) {
  const std::size_t m = table.num_columns();
  std::vector<double> column_score(m, 0.0);
  for (const CellMatch& match : scored.per_entity_best) {
    if (!match.matched()) continue;
    const auto c = static_cast<std::size_t>(match.column);
    if (c < m) column_score[c] = std::max(column_score[c], match.score);
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return column_score[a] > column_score[b];
  });
  order.resize(std::min(m, kMaxKeptColumns));
  std::sort(order.begin(), order.end());
  return order;
}

Linearisation linearize(const Claim& claim, const Table& table,
                        std::span<const std::size_t> kept,
                        std::optional<std::size_t> max_rows) {
  for (std::size_t c : kept) {
    if (c >= table.num_columns()) {
      throw std::out_of_range("kept column " + std::to_string(c) +
                              " out of range for table '" + table.id + "'");
    }
  }
  Linearisation out;
  out.kept_columns.assign(kept.begin(), kept.end());
  out.source_table_id = table.id;

  std::string& text = out.text;
  text = claim.text;
  text += kClaimSeparator;
  const std::size_t rows =
      std::min(table.num_rows(), max_rows.value_or(table.num_rows()));
  for (std::size_t r = 0; r < rows; ++r) {
    if (r > 0) text.push_back(' ');
    text += "row ";
    text += std::to_string(r + 1);
    text += " is :";
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (i > 0) text += " ;";
      text.push_back(' ');
      text += table.headers[kept[i]];
      text += " is ";
      text += table.cell(r, kept[i]);
    }
    text += " .";
  }
  return out;
}

}  // namespace tabver
