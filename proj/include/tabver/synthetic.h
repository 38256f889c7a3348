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

//! A constructed verification world with a known answer.
//!
//! Tables come in groups that list the same player, so entity retrieval
//! ties inside a group and the id tie-break decides the rank of the gold
//! table. Each table's first row holds a season and a kit colour. A claim
//! names the player, the gold table's season and a kit colour; it is true
//! iff the colour is the gold table's. Finding the gold table needs the
//! season, which retrieval ignores, and the verdict needs the kit cell.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tabver/corpus.h"

namespace tabver {

struct SyntheticConfig {
  std::size_t num_tables = 20;
  std::size_t group_size = 3;
  std::size_t train_claims = 200;
  std::size_t test_claims = 100;
  std::size_t filler_rows = 2;
  std::uint64_t seed = 7;
};

struct SyntheticData {
  Corpus corpus;
  std::vector<Claim> train;
  std::vector<Claim> test;
};

/// Deterministic in the config. Throws ConfigError for an empty world or a
/// group larger than the season pool.
SyntheticData make_synthetic(const SyntheticConfig& config = {});

}  // namespace tabver
