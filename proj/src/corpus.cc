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

#include "tabver/corpus.h"

#include <fstream>
#include <string>
#include <utility>

#include "tabver/errors.h"

namespace tabver {
namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ValidationError(std::string("missing field '") + key + "'");
  }
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) {
    throw ValidationError(std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r' && c != '\f' &&
        c != '\v') {
      return false;
    }
  }
  return true;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

// Calls `fn(json, line_number)` for every non-blank line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
    if (!j.is_object()) {
      throw ParseError(path.string() + ": record is not a JSON object",
                       line_no);
    }
    try {
      fn(j, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": line " +
                            std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
}

}  // namespace

void validate(const Table& table) {
  if (table.id.empty()) throw ValidationError("table id is empty");
  if (table.headers.empty()) {
    throw ValidationError("table '" + table.id + "' has no columns");
  }
  if (table.rows.empty()) {
    throw ValidationError("table '" + table.id + "' has no rows");
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.headers.size()) {
      throw ValidationError("table '" + table.id + "' row " +
                            std::to_string(r) + " has " +
                            std::to_string(table.rows[r].size()) +
                            " cells, expected " +
                            std::to_string(table.headers.size()));
    }
  }
}

void validate(const Claim& claim) {
  if (claim.id.empty()) throw ValidationError("claim id is empty");
  for (const EntitySpan& e : claim.entities) {
    if (e.start > e.end || e.end > claim.text.size()) {
      throw ValidationError("claim '" + claim.id + "': entity span [" +
                            std::to_string(e.start) + ", " +
                            std::to_string(e.end) + ") out of bounds");
    }
    std::string_view actual =
        std::string_view(claim.text).substr(e.start, e.end - e.start);
    if (actual != e.surface) {
      throw ValidationError("claim '" + claim.id + "': entity surface '" +
                            e.surface + "' does not match text '" +
                            std::string(actual) + "'");
    }
    if (is_blank(e.surface)) {
      throw ValidationError("claim '" + claim.id + "': blank entity surface");
    }
  }
}

void Corpus::add(Table table) {
  validate(table);
  if (by_id_.contains(table.id)) {
    throw ValidationError("duplicate table id '" + table.id + "'");
  }
  by_id_.emplace(table.id, tables_.size());
  tables_.push_back(std::move(table));
}

const Table* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &tables_[it->second];
}

const Table& Corpus::at(std::string_view id) const {
  const Table* t = find(id);
  if (t == nullptr) throw std::out_of_range("unknown table id '" + std::string(id) + "'");
  return *t;
}

Table table_from_json(const json& j) {
  Table t;
  t.id = require_string(j, "id");
  const json& headers = require(j, "headers");
  if (!headers.is_array()) throw ValidationError("'headers' must be an array");
  for (const json& h : headers) {
    if (!h.is_string()) throw ValidationError("header must be a string");
    t.headers.push_back(h.get<std::string>());
  }
  const json& rows = require(j, "rows");
  if (!rows.is_array()) throw ValidationError("'rows' must be an array");
  for (const json& row : rows) {
    if (!row.is_array()) throw ValidationError("row must be an array");
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (const json& c : row) {
      if (!c.is_string()) throw ValidationError("cell must be a string");
      cells.push_back(c.get<std::string>());
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

json to_json(const Table& table) {
  return json{{"id", table.id}, {"headers", table.headers}, {"rows", table.rows}};
}

Claim claim_from_json(const json& j) {
  Claim c;
  c.id = require_string(j, "id");
  c.text = require_string(j, "text");
  if (auto it = j.find("entities"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ValidationError("'entities' must be an array");
    for (const json& e : *it) {
      if (!e.is_object()) throw ValidationError("entity must be an object");
      const json& start = require(e, "start");
      const json& end = require(e, "end");
      if (!start.is_number_unsigned() || !end.is_number_unsigned()) {
        throw ValidationError("entity offsets must be non-negative integers");
      }
      c.entities.push_back({start.get<std::size_t>(), end.get<std::size_t>(),
                            require_string(e, "surface")});
    }
  }
  if (auto it = j.find("gold_table_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      throw ValidationError("'gold_table_id' must be a string or null");
    }
    c.gold_table_id = it->get<std::string>();
  }
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) {
      throw ValidationError("'label' must be true, false or null");
    }
    c.label = it->get<bool>();
  }
  validate(c);
  return c;
}

json to_json(const Claim& claim) {
  json entities = json::array();
  for (const EntitySpan& e : claim.entities) {
    entities.push_back({{"start", e.start}, {"end", e.end}, {"surface", e.surface}});
  }
  json j{{"id", claim.id}, {"text", claim.text}, {"entities", entities}};
  j["gold_table_id"] = claim.gold_table_id ? json(*claim.gold_table_id) : json(nullptr);
  j["label"] = claim.label ? json(*claim.label) : json(nullptr);
  return j;
}

Corpus load_tables(const std::filesystem::path& path) {
  Corpus corpus;
  for_each_record(path, [&](const json& j, std::size_t) {
    corpus.add(table_from_json(j));
  });
  return corpus;
}

std::vector<Claim> load_claims(const std::filesystem::path& path) {
  std::vector<Claim> claims;
  for_each_record(path, [&](const json& j, std::size_t) {
    claims.push_back(claim_from_json(j));
  });
  return claims;
}

void save_tables(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const Table& t : corpus.tables()) out << to_json(t).dump() << '\n';
}

void save_claims(std::span<const Claim> claims,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const Claim& c : claims) out << to_json(c).dump() << '\n';
}

std::vector<std::string> resolve_gold(std::span<const Claim> claims,
                                      const Corpus& corpus) {
  std::vector<std::string> warnings;
  for (const Claim& c : claims) {
    if (c.gold_table_id && !corpus.contains(*c.gold_table_id)) {
      warnings.push_back("claim '" + c.id + "' references unknown table '" +
                         *c.gold_table_id + "'");
    }
  }
  return warnings;
}

}  // namespace tabver
