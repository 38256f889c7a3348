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

#include "tabver/synthetic.h"

#include <array>
#include <cstdio>
#include <string>

#include "tabver/errors.h"
#include "tabver/tensor.h"

namespace tabver {
namespace {

constexpr std::array<const char*, 10> kPlayers = {
    "marta quell", "oskar brint",  "lena varga",  "tomas ruely", "ines okafor",
    "piet dahlen", "yuki marsh",   "sofia ibarz", "kemal turan", "nora fjell"};
constexpr std::array<const char*, 5> kSeasons = {"winter", "spring", "summer",
                                                 "autumn", "monsoon"};
constexpr std::array<const char*, 8> kKits = {
    "aquamarine", "burgundy", "chartreuse", "fuchsia",
    "periwinkle", "saffron",  "turquoise",  "vermilion"};

std::string filler_name(Rng& rng) {
  std::string s;
  for (int i = 0; i < 7; ++i) s.push_back(static_cast<char>('a' + rng.index(26)));
  return s;
}

std::string table_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "syn%02zu", i);
  return buf;
}

struct Fact {
  std::string id;
  std::string player;
  std::string season;
  std::size_t kit;
};

Claim make_claim(const std::string& id, const Fact& gold, bool label, Rng& rng) {
  std::size_t kit = gold.kit;
  if (!label) {
    kit = rng.index(kKits.size() - 1);
    if (kit >= gold.kit) ++kit;
  }
  Claim c;
  c.id = id;
  c.text = gold.player + " played in " + gold.season + " with kit " + kKits[kit];
  c.entities.push_back({0, gold.player.size(), gold.player});
  c.gold_table_id = gold.id;
  c.label = label;
  return c;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticConfig& config) {
  if (config.num_tables == 0 || config.group_size == 0) {
    throw ConfigError("synthetic world needs at least one table and group size 1");
  }
  if (config.group_size > kSeasons.size()) {
    throw ConfigError("synthetic group_size exceeds the " +
                      std::to_string(kSeasons.size()) + " available seasons");
  }
  const std::size_t groups = (config.num_tables + config.group_size - 1) / config.group_size;
  if (groups > kPlayers.size()) {
    throw ConfigError("synthetic world needs more than " +
                      std::to_string(kPlayers.size()) + " player groups");
  }

  Rng rng(config.seed);
  SyntheticData data;
  std::vector<Fact> facts;
  for (std::size_t g = 0, t = 0; g < groups; ++g) {
    std::vector<std::size_t> seasons(kSeasons.size());
    for (std::size_t i = 0; i < seasons.size(); ++i) seasons[i] = i;
    rng.shuffle(seasons);
    for (std::size_t m = 0; m < config.group_size && t < config.num_tables; ++m, ++t) {
      Fact f{table_id(t), kPlayers[g], kSeasons[seasons[m]], rng.index(kKits.size())};
      Table table;
      table.id = f.id;
      table.headers = {"player", "season", "kit"};
      table.rows.push_back({f.player, f.season, kKits[f.kit]});
      for (std::size_t r = 0; r < config.filler_rows; ++r) {
        table.rows.push_back({filler_name(rng), "", ""});
      }
      data.corpus.add(std::move(table));
      facts.push_back(std::move(f));
    }
  }

  auto draw = [&](std::size_t n, const char* prefix, std::vector<Claim>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      const Fact& gold = facts[rng.index(facts.size())];
      const bool label = rng.uniform() < 0.5;
      out.push_back(make_claim(prefix + std::to_string(i), gold, label, rng));
    }
  };
  draw(config.train_claims, "train", data.train);
  draw(config.test_claims, "test", data.test);
  return data;
}

}  // namespace tabver
