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

#include "tabver/retriever.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "tabver/binary_io.h"
#include "tabver/errors.h"
#include "tabver/parallel.h"
#include "tabver/text.h"

namespace tabver {
namespace {

using GramCounts = std::vector<std::pair<std::uint64_t, std::uint32_t>>;

constexpr char kIndexMagic[8] = {'T', 'A', 'B', 'V', 'R', 'I', 'D', 'X'};

GramCounts count_grams(const std::vector<std::string>& tokens) {
  std::vector<std::uint64_t> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(gram_hash(t));
  std::sort(ids.begin(), ids.end());
  GramCounts counts;
  for (std::size_t i = 0; i < ids.size();) {
    std::size_t j = i;
    while (j < ids.size() && ids[j] == ids[i]) ++j;
    counts.emplace_back(ids[i], static_cast<std::uint32_t>(j - i));
    i = j;
  }
  return counts;
}

template <typename IdfFn>
TfIdfVector weigh(const GramCounts& counts, IdfFn&& idf) {
  TfIdfVector v;
  v.entries.reserve(counts.size());
  double sq = 0.0;
  for (const auto& [gram, tf] : counts) {
    const double w = static_cast<double>(tf) * idf(gram);
    v.entries.emplace_back(gram, w);
    sq += w * w;
  }
  if (sq > 0.0) {
    const double norm = std::sqrt(sq);
    for (auto& e : v.entries) e.second /= norm;
  }
  return v;
}

double smoothed_idf(std::size_t doc_count, std::size_t df) {
  return std::log(static_cast<double>(doc_count + 1) /
                  static_cast<double>(df + 1)) +
         1.0;
}

struct PendingCell {
  std::uint32_t row;
  std::uint32_t column;
  std::uint64_t exact_key;
  GramCounts counts;
};

// Per-thread scratch for retrieve_topk. Invariant between queries: `acc` is
// all zero and `slot` is all -1.
struct Workspace {
  std::vector<double> acc;
  std::vector<std::uint32_t> touched_cells;
  std::vector<double> best_score;
  std::vector<std::uint32_t> best_local;
  std::vector<std::uint32_t> touched_tables;
  std::vector<std::int32_t> slot;

  void ensure(std::size_t cells, std::size_t tables) {
    if (acc.size() < cells) acc.resize(cells, 0.0);
    if (best_score.size() < tables) {
      best_score.resize(tables, 0.0);
      best_local.resize(tables, std::numeric_limits<std::uint32_t>::max());
      slot.resize(tables, -1);
    }
  }
};

Workspace& thread_workspace() {
  thread_local Workspace ws;
  return ws;
}

}  // namespace

std::string to_string(TokenUnit unit) {
  switch (unit) {
    case TokenUnit::char_gram:
      return "char_gram";
    case TokenUnit::word:
      return "word";
    case TokenUnit::word_gram:
      return "word_gram";
  }
  return "?";
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::entity_level:
      return "entity_level";
    case Strategy::query_level:
      return "query_level";
    case Strategy::exact_match:
      return "exact_match";
  }
  return "?";
}

TokenUnit token_unit_from_string(std::string_view s) {
  if (s == "char_gram") return TokenUnit::char_gram;
  if (s == "word") return TokenUnit::word;
  if (s == "word_gram") return TokenUnit::word_gram;
  throw ConfigError("unknown token unit '" + std::string(s) + "'");
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "entity_level") return Strategy::entity_level;
  if (s == "query_level") return Strategy::query_level;
  if (s == "exact_match") return Strategy::exact_match;
  throw ConfigError("unknown retrieval strategy '" + std::string(s) + "'");
}

void IndexConfig::validate() const {
  if (strategy == Strategy::exact_match) return;
  if (unit != TokenUnit::word && gram_orders.empty()) {
    throw ConfigError("gram_orders must be non-empty for gram units");
  }
  for (std::size_t i = 0; i < gram_orders.size(); ++i) {
    if (gram_orders[i] <= 0) throw ConfigError("gram orders must be positive");
    if (i > 0 && gram_orders[i] <= gram_orders[i - 1]) {
      throw ConfigError("gram orders must be sorted and unique");
    }
  }
}

nlohmann::json IndexConfig::to_json() const {
  return {{"gram_orders", gram_orders},
          {"unit", to_string(unit)},
          {"strategy", to_string(strategy)}};
}

IndexConfig IndexConfig::from_json(const nlohmann::json& j) {
  IndexConfig c;
  c.gram_orders = j.at("gram_orders").get<std::vector<int>>();
  c.unit = token_unit_from_string(j.at("unit").get<std::string>());
  c.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  c.validate();
  return c;
}

std::uint64_t IndexConfig::fingerprint() const {
  return gram_hash(to_json().dump());
}

std::optional<IndexConfig> strategy_preset(std::string_view name) {
  IndexConfig c;
  if (name == "entity_char23") return c;
  if (name == "entity_char123") {
    c.gram_orders = {1, 2, 3};
    return c;
  }
  if (name == "entity_word") {
    c.unit = TokenUnit::word;
    c.gram_orders = {1};
    return c;
  }
  if (name == "entity_exact") {
    c.strategy = Strategy::exact_match;
    return c;
  }
  if (name == "query_word") {
    c.strategy = Strategy::query_level;
    c.unit = TokenUnit::word;
    c.gram_orders = {1};
    return c;
  }
  if (name == "query_char23") {
    c.strategy = Strategy::query_level;
    return c;
  }
  return std::nullopt;
}

std::vector<std::string> strategy_preset_names() {
  return {"entity_char23", "entity_char123", "entity_word",
          "entity_exact",  "query_word",     "query_char23"};
}

std::vector<std::string> tokenize(std::string_view text,
                                  const IndexConfig& config) {
  const std::string normalized = normalize_text(text);
  switch (config.unit) {
    case TokenUnit::char_gram:
      return char_grams(normalized, config.gram_orders);
    case TokenUnit::word:
      return split_words(normalized);
    case TokenUnit::word_gram:
      return word_grams(normalized, config.gram_orders);
  }
  return {};
}

double TfIdfVector::norm() const {
  double sq = 0.0;
  for (const auto& e : entries) sq += e.second * e.second;
  return std::sqrt(sq);
}

double dot(const TfIdfVector& a, const TfIdfVector& b) {
  double sum = 0.0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      sum += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return sum;
}

CellIndex CellIndex::build(const Corpus& corpus, const IndexConfig& config,
                           unsigned threads) {
  config.validate();
  if (corpus.empty()) throw ValidationError("cannot index an empty corpus");

  const bool exact = config.strategy == Strategy::exact_match;
  const auto tables = corpus.tables();
  std::vector<std::vector<PendingCell>> pending(tables.size());

  parallel_for(tables.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const Table& table = tables[t];
      for (std::size_t r = 0; r < table.num_rows(); ++r) {
        for (std::size_t c = 0; c < table.num_columns(); ++c) {
          const std::string& text = table.cell(r, c);
          const std::string normalized = normalize_text(text);
          PendingCell cell{static_cast<std::uint32_t>(r),
                           static_cast<std::uint32_t>(c),
                           gram_hash(normalized),
                           {}};
          if (exact) {
            if (normalized.empty()) continue;
          } else {
            cell.counts = count_grams(tokenize(normalized, config));
            if (cell.counts.empty()) continue;
          }
          pending[t].push_back(std::move(cell));
        }
      }
    }
  });

  CellIndex index;
  index.config_ = config;
  std::size_t docs = 0;
  std::unordered_map<std::uint64_t, std::size_t> df;
  for (const auto& cells : pending) {
    docs += cells.size();
    for (const PendingCell& cell : cells) {
      for (const auto& [gram, tf] : cell.counts) ++df[gram];
    }
  }
  if (docs == 0) {
    throw ValidationError("corpus contains no indexable cells");
  }
  index.idf_.reserve(df.size());
  for (const auto& [gram, count] : df) {
    index.idf_.emplace(gram, smoothed_idf(docs, count));
  }

  index.tables_.resize(tables.size());
  parallel_for(tables.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      IndexedTable& out = index.tables_[t];
      out.id = tables[t].id;
      out.num_rows = static_cast<std::uint32_t>(tables[t].num_rows());
      out.num_columns = static_cast<std::uint32_t>(tables[t].num_columns());
      out.cells.reserve(pending[t].size());
      for (const PendingCell& cell : pending[t]) {
        IndexedCell ic{cell.row, cell.column, cell.exact_key, {}};
        if (!exact) {
          ic.vector = weigh(cell.counts, [&](std::uint64_t g) {
            return index.idf_.at(g);
          });
        }
        out.cells.push_back(std::move(ic));
      }
    }
  });
  index.finalize();
  return index;
}

void CellIndex::finalize() {
  table_by_id_.clear();
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    if (!table_by_id_.emplace(tables_[t].id, t).second) {
      throw ValidationError("duplicate table id '" + tables_[t].id + "'");
    }
  }
  tables_by_id_.resize(tables_.size());
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    tables_by_id_[t] = static_cast<std::uint32_t>(t);
  }
  std::sort(tables_by_id_.begin(), tables_by_id_.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              return tables_[a].id < tables_[b].id;
            });
  id_rank_.assign(tables_.size(), 0);
  for (std::size_t r = 0; r < tables_by_id_.size(); ++r) {
    id_rank_[tables_by_id_[r]] = static_cast<std::uint32_t>(r);
  }

  cell_table_.clear();
  cell_local_.clear();
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    for (std::size_t c = 0; c < tables_[t].cells.size(); ++c) {
      cell_table_.push_back(static_cast<std::uint32_t>(t));
      cell_local_.push_back(static_cast<std::uint32_t>(c));
    }
  }

  posting_range_.clear();
  postings_.clear();
  exact_postings_.clear();
  if (config_.strategy == Strategy::exact_match) {
    for (std::uint32_t ord = 0; ord < cell_table_.size(); ++ord) {
      const IndexedCell& cell = tables_[cell_table_[ord]].cells[cell_local_[ord]];
      exact_postings_[cell.exact_key].push_back(ord);
    }
    return;
  }

  std::unordered_map<std::uint64_t, std::uint32_t> lengths;
  for (const IndexedTable& table : tables_) {
    for (const IndexedCell& cell : table.cells) {
      for (const auto& e : cell.vector.entries) ++lengths[e.first];
    }
  }
  std::vector<std::uint64_t> grams;
  grams.reserve(lengths.size());
  for (const auto& [gram, n] : lengths) grams.push_back(gram);
  std::sort(grams.begin(), grams.end());
  std::uint32_t offset = 0;
  posting_range_.reserve(grams.size());
  for (std::uint64_t gram : grams) {
    const std::uint32_t n = lengths[gram];
    posting_range_.emplace(gram, std::make_pair(offset, offset));
    offset += n;
  }
  postings_.resize(offset);
  for (std::uint32_t ord = 0; ord < cell_table_.size(); ++ord) {
    const IndexedCell& cell = tables_[cell_table_[ord]].cells[cell_local_[ord]];
    for (const auto& [gram, weight] : cell.vector.entries) {
      auto& range = posting_range_.at(gram);
      postings_[range.second++] = Posting{ord, weight};
    }
  }
}

const IndexedTable* CellIndex::find_table(std::string_view id) const {
  auto it = table_by_id_.find(std::string(id));
  return it == table_by_id_.end() ? nullptr : &tables_[it->second];
}

std::optional<double> CellIndex::idf(std::uint64_t gram) const {
  auto it = idf_.find(gram);
  if (it == idf_.end()) return std::nullopt;
  return it->second;
}

double CellIndex::idf_or_unseen(std::uint64_t gram) const {
  auto it = idf_.find(gram);
  return it == idf_.end() ? smoothed_idf(doc_count(), 0) : it->second;
}

TfIdfVector CellIndex::vectorize(std::string_view text) const {
  return weigh(count_grams(tokenize(text, config_)),
               [&](std::uint64_t g) { return idf_or_unseen(g); });
}

std::vector<std::string> CellIndex::query_units(const Claim& claim) const {
  if (config_.strategy == Strategy::query_level) return {claim.text};
  std::vector<std::string> units;
  units.reserve(claim.entities.size());
  for (const EntitySpan& e : claim.entities) units.push_back(e.surface);
  return units;
}

ScoredTable CellIndex::make_scored(std::size_t table_index, double score,
                                   std::vector<CellMatch> per_entity) const {
  return ScoredTable{tables_[table_index].id, score, std::move(per_entity)};
}

ScoredTable CellIndex::score_table(const Claim& claim,
                                   std::string_view table_id) const {
  const IndexedTable* table = find_table(table_id);
  if (table == nullptr) {
    throw std::out_of_range("table '" + std::string(table_id) +
                            "' is not indexed");
  }
  const std::vector<std::string> units = query_units(claim);
  const bool exact = config_.strategy == Strategy::exact_match;
  std::vector<CellMatch> best(units.size());
  double total = 0.0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const std::string normalized = normalize_text(units[i]);
    const std::uint64_t key = gram_hash(normalized);
    const TfIdfVector query = exact ? TfIdfVector{} : vectorize(units[i]);
    for (const IndexedCell& cell : table->cells) {
      double s = 0.0;
      if (exact) {
        s = !normalized.empty() && cell.exact_key == key ? 1.0 : 0.0;
      } else {
        s = dot(query, cell.vector);
      }
      if (s > best[i].score) {
        best[i] = CellMatch{static_cast<int>(cell.column),
                            static_cast<int>(cell.row), s};
      }
    }
    total += best[i].score;
  }
  return ScoredTable{table->id, total, std::move(best)};
}

std::vector<ScoredTable> CellIndex::retrieve_topk(const Claim& claim,
                                                  std::size_t k) const {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  const std::vector<std::string> units = query_units(claim);
  const bool exact = config_.strategy == Strategy::exact_match;

  Workspace& ws = thread_workspace();
  ws.ensure(doc_count(), tables_.size());

  struct Slot {
    std::uint32_t table;
    double score;
    std::vector<CellMatch> best;
  };
  std::vector<Slot> slots;

  for (std::size_t i = 0; i < units.size(); ++i) {
    ws.touched_cells.clear();
    if (exact) {
      const std::string normalized = normalize_text(units[i]);
      if (!normalized.empty()) {
        auto it = exact_postings_.find(gram_hash(normalized));
        if (it != exact_postings_.end()) {
          for (std::uint32_t ord : it->second) {
            ws.acc[ord] = 1.0;
            ws.touched_cells.push_back(ord);
          }
        }
      }
    } else {
      const TfIdfVector query = vectorize(units[i]);
      for (const auto& [gram, weight] : query.entries) {
        auto it = posting_range_.find(gram);
        if (it == posting_range_.end()) continue;
        for (std::uint32_t p = it->second.first; p < it->second.second; ++p) {
          const Posting& posting = postings_[p];
          if (ws.acc[posting.cell] == 0.0) ws.touched_cells.push_back(posting.cell);
          ws.acc[posting.cell] += weight * posting.weight;
        }
      }
    }

    // Best cell per touched table; ties resolve to the earliest cell in
    // row-major order, matching score_table's strict-greater scan.
    ws.touched_tables.clear();
    for (std::uint32_t ord : ws.touched_cells) {
      const double s = ws.acc[ord];
      ws.acc[ord] = 0.0;
      if (!(s > 0.0)) continue;
      const std::uint32_t t = cell_table_[ord];
      const std::uint32_t local = cell_local_[ord];
      if (ws.best_local[t] == std::numeric_limits<std::uint32_t>::max()) {
        ws.touched_tables.push_back(t);
        ws.best_score[t] = s;
        ws.best_local[t] = local;
      } else if (s > ws.best_score[t] ||
                 (s == ws.best_score[t] && local < ws.best_local[t])) {
        ws.best_score[t] = s;
        ws.best_local[t] = local;
      }
    }
    for (std::uint32_t t : ws.touched_tables) {
      if (ws.slot[t] < 0) {
        ws.slot[t] = static_cast<std::int32_t>(slots.size());
        slots.push_back(Slot{t, 0.0, std::vector<CellMatch>(units.size())});
      }
      Slot& slot = slots[static_cast<std::size_t>(ws.slot[t])];
      const IndexedCell& cell = tables_[t].cells[ws.best_local[t]];
      slot.best[i] = CellMatch{static_cast<int>(cell.column),
                               static_cast<int>(cell.row), ws.best_score[t]};
      ws.best_score[t] = 0.0;
      ws.best_local[t] = std::numeric_limits<std::uint32_t>::max();
    }
  }
  // Entity-order summation, identical to score_table.
  for (Slot& slot : slots) {
    double total = 0.0;
    for (const CellMatch& m : slot.best) total += m.score;
    slot.score = total;
  }

  std::sort(slots.begin(), slots.end(), [&](const Slot& a, const Slot& b) {
    if (a.score != b.score) return a.score > b.score;
    return id_rank_[a.table] < id_rank_[b.table];
  });

  const std::size_t want = std::min(k, tables_.size());
  std::vector<ScoredTable> out;
  out.reserve(want);
  for (const Slot& slot : slots) {
    if (out.size() == want) break;
    if (!(slot.score > 0.0)) break;
    out.push_back(make_scored(slot.table, slot.score, slot.best));
  }
  if (out.size() < want) {
    for (std::uint32_t t : tables_by_id_) {
      if (out.size() == want) break;
      // Every slotted table has a positive score and is already ranked.
      if (ws.slot[t] >= 0) continue;
      out.push_back(make_scored(t, 0.0, std::vector<CellMatch>(units.size())));
    }
  }
  for (const Slot& slot : slots) ws.slot[slot.table] = -1;
  return out;
}

std::vector<std::vector<ScoredTable>> CellIndex::retrieve_all(
    std::span<const Claim> claims, std::size_t k, unsigned threads) const {
  std::vector<std::vector<ScoredTable>> out(claims.size());
  parallel_for(claims.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = retrieve_topk(claims[i], k);
  });
  return out;
}

void CellIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kIndexMagic, sizeof kIndexMagic);
  io::write_u32(out, kFormatVersion);
  io::write_string(out, config_.to_json().dump());
  io::write_u64(out, config_.fingerprint());
  io::write_string(out, metadata_);
  io::write_u64(out, tables_.size());
  for (const IndexedTable& table : tables_) {
    io::write_string(out, table.id);
    io::write_u32(out, table.num_rows);
    io::write_u32(out, table.num_columns);
    io::write_u64(out, table.cells.size());
    for (const IndexedCell& cell : table.cells) {
      io::write_u32(out, cell.row);
      io::write_u32(out, cell.column);
      io::write_u64(out, cell.exact_key);
      io::write_u64(out, cell.vector.entries.size());
      for (const auto& [gram, weight] : cell.vector.entries) {
        io::write_u64(out, gram);
        io::write_f64(out, weight);
      }
    }
  }
  std::vector<std::pair<std::uint64_t, double>> idf(idf_.begin(), idf_.end());
  std::sort(idf.begin(), idf.end());
  io::write_u64(out, idf.size());
  for (const auto& [gram, value] : idf) {
    io::write_u64(out, gram);
    io::write_f64(out, value);
  }
  if (!out) throw InputError("failed writing " + path.string());
}

CellIndex CellIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open index " + path.string());
  char magic[sizeof kIndexMagic];
  io::read_raw(in, magic, sizeof magic);
  if (!std::equal(magic, magic + sizeof magic, kIndexMagic)) {
    throw ParseError(path.string() + " is not a tabver index", 0);
  }
  const std::uint32_t version = io::read_u32(in);
  if (version != kFormatVersion) {
    throw ParseError("unsupported index format version " +
                         std::to_string(version),
                     0);
  }
  CellIndex index;
  index.config_ =
      IndexConfig::from_json(nlohmann::json::parse(io::read_string(in)));
  if (io::read_u64(in) != index.config_.fingerprint()) {
    throw ParseError("index config fingerprint mismatch", 0);
  }
  index.metadata_ = io::read_string(in);
  const std::uint64_t n_tables = io::read_u64(in);
  index.tables_.resize(n_tables);
  for (IndexedTable& table : index.tables_) {
    table.id = io::read_string(in);
    table.num_rows = io::read_u32(in);
    table.num_columns = io::read_u32(in);
    const std::uint64_t n_cells = io::read_u64(in);
    table.cells.resize(n_cells);
    for (IndexedCell& cell : table.cells) {
      cell.row = io::read_u32(in);
      cell.column = io::read_u32(in);
      cell.exact_key = io::read_u64(in);
      const std::uint64_t n = io::read_u64(in);
      cell.vector.entries.resize(n);
      for (auto& [gram, weight] : cell.vector.entries) {
        gram = io::read_u64(in);
        weight = io::read_f64(in);
      }
    }
  }
  const std::uint64_t n_idf = io::read_u64(in);
  index.idf_.reserve(n_idf);
  for (std::uint64_t i = 0; i < n_idf; ++i) {
    const std::uint64_t gram = io::read_u64(in);
    index.idf_.emplace(gram, io::read_f64(in));
  }
  index.finalize();
  return index;
}

}  // namespace tabver
