// Copyright 2026 The keymask Authors.
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
#include <random>
#include <set>

#include "keymask/error.hpp"
#include "keymask/keyword_extract.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace keymask;

namespace {

using Rows = std::vector<std::pair<std::string, std::vector<double>>>;

// Doc vector (1, 0); "beta" nearly duplicates "alpha".
Rows HandRows() {
  return {{"alpha", {1.0, 0.1}}, {"beta", {1.0, 0.12}}, {"gamma", {0.6, 0.8}}, {"delta", {0.0, 1.0}}};
}

std::vector<std::string> SelectFor(const Rows& rows, std::size_t top_k, double diversity) {
  const StaticEmbeddings table(2, rows);
  std::vector<std::string> surfaces;
  for (const auto& r : rows) surfaces.push_back(r.first);
  std::vector<EmbeddingVector> vecs;
  const auto ranked = RankCandidates(surfaces, table, EmbeddingVector({1.0, 0.0}), &vecs);
  ExtractionParams p;
  p.top_k = top_k;
  p.diversity = diversity;
  return MmrSelect(ranked, vecs, p);
}

}  // namespace

TEST_CASE("candidate unigrams drop stopwords, numbers and short words") {
  ExtractionParams p;
  const std::vector<std::string> words = {"the", "covid", "19", "a", "covid", "vaccines", "of", "x", "2nd"};
  CHECK(CandidateUnigrams(words, p) == std::vector<std::string>{"covid", "vaccines", "2nd"});
  p.stopwords = nullptr;
  p.min_word_len = 1;
  CHECK(CandidateUnigrams(words, p) == std::vector<std::string>{"the", "covid", "a", "vaccines", "of", "x", "2nd"});
  // Length counts code points, not bytes.
  ExtractionParams q;
  q.min_word_len = 3;
  const std::vector<std::string> accented = {"éé", "ééé"};
  CHECK(CandidateUnigrams(accented, q) == std::vector<std::string>{"ééé"});
}

TEST_CASE("the default stopword list") {
  const auto sw = DefaultStopwords();
  CHECK(sw->size() == 318);
  CHECK(sw->contains("the"));
  CHECK(sw->contains("whereupon"));
  CHECK_FALSE(sw->contains("vaccine"));
}

TEST_CASE("rank candidates by document similarity") {
  const StaticEmbeddings table(2, HandRows());
  const std::vector<std::string> surfaces = {"delta", "gamma", "unknown", "alpha", "beta"};
  const auto ranked = RankCandidates(surfaces, table, EmbeddingVector({1.0, 0.0}));
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].surface == "alpha");
  CHECK(ranked[1].surface == "beta");
  CHECK(ranked[2].surface == "gamma");
  CHECK(ranked[2].doc_similarity == doctest::Approx(0.6).epsilon(1e-6));  // float storage
  CHECK(ranked[3].surface == "delta");
}

TEST_CASE("hand-checked MMR selections") {
  // diversity 0.8, after alpha: delta scores -0.08, gamma -0.42, beta -0.60.
  CHECK(SelectFor(HandRows(), 3, 0.8) == std::vector<std::string>{"alpha", "delta", "gamma"});
  CHECK(SelectFor(HandRows(), 4, 0.8) == std::vector<std::string>{"alpha", "delta", "gamma", "beta"});
  // diversity 0 is the relevance ranking.
  CHECK(SelectFor(HandRows(), 3, 0.0) == std::vector<std::string>{"alpha", "beta", "gamma"});
  CHECK(SelectFor(HandRows(), 1, 0.8) == std::vector<std::string>{"alpha"});
  CHECK(SelectFor(HandRows(), 10, 0.8).size() == 4);

  std::vector<oracle::MmrCandidate> cands;
  for (const auto& [s, v] : HandRows()) cands.push_back({s, oracle::Cosine(v, {1.0, 0.0}), v});
  for (double d : {0.0, 0.3, 0.5, 0.8, 1.0}) {
    for (std::size_t k = 1; k <= 4; ++k) CHECK(SelectFor(HandRows(), k, d) == oracle::GreedyMmr(cands, k, d));
  }
}

TEST_CASE("MMR ties go to the smaller surface regardless of input order (property)") {
  std::mt19937_64 rng(17);
  Rows rows = {{"pear", {1, 1, 0}}, {"apple", {1, 1, 0}}, {"fig", {0, 1, 1}},
               {"date", {0, 1, 1}}, {"kiwi", {1, 0, 1}}, {"lime", {2, 2, 0}}};
  const StaticEmbeddings table(3, rows);
  const EmbeddingVector doc({1, 1, 1});
  std::vector<std::string> surfaces;
  for (const auto& r : rows) surfaces.push_back(r.first);
  ExtractionParams p;
  p.top_k = 4;
  std::vector<std::string> reference;
  for (int t = 0; t < 50; ++t) {
    std::shuffle(surfaces.begin(), surfaces.end(), rng);
    const auto ranked = RankCandidates(surfaces, table, doc);
    const auto picked = MmrSelect(ranked, table, p);
    if (reference.empty()) reference = picked;
    CHECK(picked == reference);
  }
  CHECK(reference.front() == "apple");
}

TEST_CASE("parameter validation") {
  ExtractionParams p;
  p.top_k = 0;
  CHECK_THROWS_AS(p.Validate(), ConfigError);
  p.top_k = 3;
  p.diversity = 1.5;
  CHECK_THROWS_AS(p.Validate(), ConfigError);
  p.diversity = 1.0;
  CHECK_NOTHROW(p.Validate());
}

TEST_CASE("extracted keywords stay within bounds (property)") {
  const keymask::testing::SyntheticWorld world;
  const auto table = world.MakeEmbeddings();
  const auto docs = world.MakeCorpus(200, 40);
  ExtractionParams p;
  const auto lists = ExtractKeywords(docs, table, p, 1);
  REQUIRE(lists.size() == docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::set<std::string> words;
    for (const auto& w : SegmentWords(docs[i].text)) words.insert(w.surface);
    const std::set<std::string> unique(lists[i].begin(), lists[i].end());
    CHECK(lists[i].size() <= p.top_k);
    CHECK(unique.size() == lists[i].size());
    for (const auto& k : lists[i]) {
      CHECK(words.contains(k));
      CHECK_FALSE(p.stopwords->contains(k));
    }
  }
  CHECK(ExtractKeywords(docs, table, p, 3) == lists);
}

TEST_CASE("documents without usable words yield no keywords") {
  const keymask::testing::SyntheticWorld world;
  const auto table = world.MakeEmbeddings();
  ExtractionParams p;
  CHECK(ExtractDocumentKeywords({"e", ""}, table, p).empty());
  CHECK(ExtractDocumentKeywords({"s", "the and of 42"}, table, p).empty());
  CHECK(ExtractDocumentKeywords({"u", "zzyzx qwerty"}, table, p).empty());
}
