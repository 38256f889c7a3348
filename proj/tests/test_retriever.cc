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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.h"
#include "tabver/errors.h"
#include "tabver/retriever.h"
#include "tabver/text.h"
#include "test_util.h"

using namespace tabver;

namespace {

Corpus toy_corpus() { return load_tables(testing::data_path("toy_tables.jsonl")); }
std::vector<Claim> toy_claims() { return load_claims(testing::data_path("toy_claims.jsonl")); }

Claim claim_with(std::vector<std::string> surfaces) {
  Claim c;
  c.id = "q";
  for (const std::string& s : surfaces) {
    if (!c.text.empty()) c.text += " ";
    c.entities.push_back({c.text.size(), c.text.size() + s.size(), s});
    c.text += s;
  }
  return c;
}

}  // namespace

TEST_SUITE("text") {
  TEST_CASE("normalization lowercases and collapses whitespace") {
    CHECK(normalize_text("  New \t York\n") == "new york");
    CHECK(normalize_text("") == "");
    CHECK(normalize_text("   ") == "");
    CHECK(normalize_text("CAF\xc3\x89") == "caf\xc3\x89");  // non-ASCII untouched
  }

  TEST_CASE("character grams slide over code points") {
    const std::vector<int> orders{2, 3};
    CHECK(char_grams("ab", orders) == std::vector<std::string>{"ab"});
    CHECK(char_grams("a", orders).empty());
    const std::vector<int> two{2};
    CHECK(char_grams("\xc3\xa9t\xc3\xa9", two) ==
          std::vector<std::string>{"\xc3\xa9t", "t\xc3\xa9"});
  }

  TEST_CASE("word grams join with one space") {
    const std::vector<int> orders{1, 2};
    CHECK(word_grams("a b c", orders) ==
          std::vector<std::string>{"a", "b", "c", "a b", "b c"});
  }

  TEST_CASE("gram hash matches its published definition") {
    // Seeded FNV-1a over the bytes, xor the length, then splitmix64.
    // Values computed independently from that definition.
    CHECK(gram_hash("ab") == 0x26da213c67ff63c6ULL);
    CHECK(gram_hash("") == 0x382124dcbc864ef5ULL);
    CHECK(gram_hash("paris") == 0xaae415307dadd95dULL);
    CHECK(gram_hash("ab", 1) != gram_hash("ab"));
  }
}

TEST_SUITE("retriever") {
  TEST_CASE("tokenize character bigrams and trigrams") {
    IndexConfig cfg;
    CHECK(tokenize("ab", cfg) == std::vector<std::string>{"ab"});
    CHECK(tokenize("", cfg).empty());
    // "new york" has 8 code points: 7 bigrams and 6 trigrams.
    const auto grams = tokenize("New  York", cfg);
    const std::vector<std::string> expected = {"ne",  "ew",  "w ",  " y",  "yo",
                                               "or",  "rk",  "new", "ew ", "w y",
                                               " yo", "yor", "ork"};
    CHECK(grams == expected);
  }

  TEST_CASE("a single-cell corpus gives unit vectors") {
    Corpus c;
    c.add(Table{"t", {"city"}, {{"paris"}}});
    const CellIndex index = CellIndex::build(c, IndexConfig{});
    REQUIRE(index.doc_count() == 1);
    const double first = *index.idf(gram_hash("pa"));
    for (const std::string& g : tokenize("paris", IndexConfig{})) {
      CHECK(*index.idf(gram_hash(g)) == doctest::Approx(first).epsilon(1e-15));
    }
    CHECK(first == doctest::Approx(1.0 + std::log(2.0 / 2.0)));
    CHECK(index.tables()[0].cells[0].vector.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("an empty corpus cannot be indexed") {
    CHECK_THROWS_AS(CellIndex::build(Corpus{}, IndexConfig{}), ValidationError);
    Corpus blank;
    blank.add(Table{"t", {"a"}, {{"  "}}});
    CHECK_THROWS_AS(CellIndex::build(blank, IndexConfig{}), ValidationError);
  }

  TEST_CASE("toy corpus idf values") {
    // Twelve non-empty cells. ln((N + 1) / (df + 1)) + 1 by hand:
    // "pa" occurs in two "paris" cells, "se" only in "seine", "77" in "777".
    const Corpus corpus = toy_corpus();
    const CellIndex index = CellIndex::build(corpus, IndexConfig{});
    CHECK(index.doc_count() == 12);
    const double df2 = 2.466337068793427;   // ln(13/3) + 1
    const double df1 = 2.8718021769015913;  // ln(13/2) + 1
    CHECK(*index.idf(gram_hash("pa")) == doctest::Approx(df2).epsilon(1e-12));
    CHECK(*index.idf(gram_hash("ro")) == doctest::Approx(df2).epsilon(1e-12));
    CHECK(*index.idf(gram_hash("an")) == doctest::Approx(df2).epsilon(1e-12));
    CHECK(*index.idf(gram_hash("se")) == doctest::Approx(df1).epsilon(1e-12));
    CHECK(*index.idf(gram_hash("77")) == doctest::Approx(df1).epsilon(1e-12));
    CHECK(*index.idf(gram_hash("777")) == doctest::Approx(df1).epsilon(1e-12));
    CHECK_FALSE(index.idf(gram_hash("zz")).has_value());
    // Grams absent from the index take df = 0.
    CHECK(index.idf_or_unseen(gram_hash("zz")) ==
          doctest::Approx(std::log(13.0) + 1.0).epsilon(1e-12));
    CHECK(index.idf(gram_hash("pa")) ==
          doctest::Approx(oracle::naive_idf(corpus, "pa", IndexConfig{})).epsilon(1e-12));
  }

  TEST_CASE("toy corpus score matrix") {
    // Brute force over every entity-cell dot product, by string grams.
    const CellIndex index = CellIndex::build(toy_corpus(), IndexConfig{});
    const auto claims = toy_claims();
    const char* ids[] = {"t_cities", "t_people", "t_rivers"};
    const double expected[3][3] = {
        {1.1146366687227098, 2.0, 0.0},
        {0.0, 0.0, 2.0},
        {2.0, 1.11463666872271, 0.0},
    };
    for (std::size_t q = 0; q < 3; ++q) {
      for (std::size_t t = 0; t < 3; ++t) {
        CAPTURE(q);
        CAPTURE(t);
        CHECK(std::abs(index.score_table(claims[q], ids[t]).score - expected[q][t]) < 1e-9);
      }
    }
    // "anna" against t_cities is matched by its "an" overlap with "france".
    const ScoredTable s = index.score_table(claims[0], "t_cities");
    CHECK(s.per_entity_best[0].column == 1);
    CHECK(s.per_entity_best[0].row == 0);
    CHECK(std::abs(s.per_entity_best[0].score - 0.11463666872271021) < 1e-9);
    CHECK(s.per_entity_best[1] == CellMatch{0, 0, s.per_entity_best[1].score});
    // Nothing in t_rivers matches c1.
    CHECK_FALSE(index.score_table(claims[0], "t_rivers").per_entity_best[0].matched());
  }

  TEST_CASE("toy corpus ranking") {
    const CellIndex index = CellIndex::build(toy_corpus(), IndexConfig{});
    const auto claims = toy_claims();
    auto ids = [&](const Claim& c) {
      std::vector<std::string> out;
      for (const auto& s : index.retrieve_topk(c, 3)) out.push_back(s.table_id);
      return out;
    };
    CHECK(ids(claims[0]) == std::vector<std::string>{"t_people", "t_cities", "t_rivers"});
    // Two zero scores tie and fall back to id order.
    CHECK(ids(claims[1]) == std::vector<std::string>{"t_rivers", "t_cities", "t_people"});
    CHECK(ids(claims[2]) == std::vector<std::string>{"t_cities", "t_people", "t_rivers"});
  }

  TEST_CASE("zero entities score zero everywhere") {
    const CellIndex index = CellIndex::build(toy_corpus(), IndexConfig{});
    Claim c;
    c.id = "empty";
    c.text = "no entities at all";
    for (const auto& s : index.retrieve_topk(c, 3)) CHECK(s.score == 0.0);
  }

  TEST_CASE("an entity equal to a cell contributes exactly one") {
    const CellIndex index = CellIndex::build(toy_corpus(), IndexConfig{});
    const ScoredTable s = index.score_table(claim_with({"  SEINE "}), "t_rivers");
    CHECK(s.score == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("k beyond the corpus returns every table, sorted") {
    const CellIndex index = CellIndex::build(toy_corpus(), IndexConfig{});
    const auto r = index.retrieve_topk(toy_claims()[0], 50);
    CHECK(r.size() == 3);
    CHECK(std::is_sorted(r.begin(), r.end(), [](const auto& a, const auto& b) {
      return a.score > b.score;
    }));
    CHECK_THROWS_AS(index.retrieve_topk(toy_claims()[0], 0), std::invalid_argument);
  }

  TEST_CASE("equal scores order by table id") {
    Corpus c;
    c.add(Table{"zeta", {"a"}, {{"oslo"}}});
    c.add(Table{"alpha", {"a"}, {{"oslo"}}});
    c.add(Table{"mid", {"a"}, {{"oslo"}}});
    const CellIndex index = CellIndex::build(c, IndexConfig{});
    const auto r = index.retrieve_topk(claim_with({"oslo"}), 2);
    REQUIRE(r.size() == 2);
    CHECK(r[0].table_id == "alpha");
    CHECK(r[1].table_id == "mid");
  }

  TEST_CASE("query-level and exact-match strategies") {
    const Corpus corpus = toy_corpus();
    const Claim c = toy_claims()[0];
    for (const char* name : {"query_word", "query_char23", "entity_exact", "entity_word",
                             "entity_char123"}) {
      CAPTURE(name);
      const IndexConfig cfg = *strategy_preset(name);
      const CellIndex index = CellIndex::build(corpus, cfg);
      const auto naive = oracle::naive_scores(corpus, c, cfg);
      for (const auto& s : index.retrieve_topk(c, 3)) {
        CHECK(std::abs(s.score - naive.at(s.table_id).score) < 1e-9);
      }
    }
    const CellIndex exact = CellIndex::build(corpus, *strategy_preset("entity_exact"));
    CHECK(exact.score_table(c, "t_people").score == 2.0);
    CHECK(exact.score_table(c, "t_cities").score == 1.0);
    CHECK(exact.score_table(claim_with({"pari"}), "t_people").score == 0.0);
  }

  TEST_CASE("randomized corpora agree with the naive oracle") {
    Rng rng(2026);
    for (int trial = 0; trial < 60; ++trial) {
      const auto world = oracle::random_world(rng, 12, 25, 4);
      IndexConfig cfg;
      if (trial % 3 == 1) cfg = *strategy_preset("entity_word");
      if (trial % 3 == 2) cfg = *strategy_preset("query_char23");
      const CellIndex index = CellIndex::build(world.corpus, cfg, 1 + trial % 2);
      for (const Claim& claim : world.claims) {
        const auto naive = oracle::naive_scores(world.corpus, claim, cfg);
        const auto ranked = index.retrieve_topk(claim, world.corpus.size());
        REQUIRE(ranked.size() == world.corpus.size());
        for (std::size_t i = 0; i < ranked.size(); ++i) {
          CHECK(std::abs(ranked[i].score - naive.at(ranked[i].table_id).score) < 1e-9);
          CHECK(std::abs(index.score_table(claim, ranked[i].table_id).score -
                         ranked[i].score) < 1e-12);
          if (i > 0) {
            CHECK(ranked[i - 1].score >= ranked[i].score);
            if (ranked[i - 1].score == ranked[i].score) {
              CHECK(ranked[i - 1].table_id < ranked[i].table_id);
            }
          }
        }
      }
    }
  }

  TEST_CASE("parallel retrieval matches serial retrieval") {
    Rng rng(3);
    const auto world = oracle::random_world(rng, 30, 20, 40);
    const CellIndex index = CellIndex::build(world.corpus, IndexConfig{}, 1);
    const auto parallel = index.retrieve_all(world.claims, 5, 4);
    for (std::size_t i = 0; i < world.claims.size(); ++i) {
      const auto serial = index.retrieve_topk(world.claims[i], 5);
      REQUIRE(serial.size() == parallel[i].size());
      for (std::size_t j = 0; j < serial.size(); ++j) {
        CHECK(serial[j].table_id == parallel[i][j].table_id);
        CHECK(serial[j].score == parallel[i][j].score);
      }
    }
  }

  TEST_CASE("a saved index reloads with identical behaviour") {
    testing::TempDir dir;
    CellIndex index = CellIndex::build(toy_corpus(), IndexConfig{});
    index.set_metadata("{\"config_hash\":\"abc\"}");
    index.save(dir / "index.bin");
    const CellIndex back = CellIndex::load(dir / "index.bin");
    CHECK(back.config() == index.config());
    CHECK(back.metadata() == index.metadata());
    CHECK(back.doc_count() == index.doc_count());
    for (const Claim& c : toy_claims()) {
      const auto a = index.retrieve_topk(c, 3);
      const auto b = back.retrieve_topk(c, 3);
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a[i].table_id == b[i].table_id);
        CHECK(a[i].score == b[i].score);
      }
    }
    testing::write_text(dir / "junk.bin", "not an index");
    CHECK_THROWS_AS(CellIndex::load(dir / "junk.bin"), ParseError);
    CHECK_THROWS_AS(CellIndex::load(dir / "missing.bin"), InputError);
  }

  TEST_CASE("config fingerprints distinguish strategies") {
    std::vector<std::uint64_t> prints;
    for (const std::string& name : strategy_preset_names()) {
      prints.push_back(strategy_preset(name)->fingerprint());
    }
    std::sort(prints.begin(), prints.end());
    CHECK(std::adjacent_find(prints.begin(), prints.end()) == prints.end());
    CHECK(IndexConfig::from_json(IndexConfig{}.to_json()) == IndexConfig{});
    CHECK_FALSE(strategy_preset("nonsense").has_value());
  }
}
