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

#include <random>
#include <sstream>

#include "keymask/error.hpp"
#include "keymask/keyword_filter.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace keymask;

namespace {

// Adds `n_words` distinct words that each occur in exactly `count` documents.
void Plant(KeywordHistogram& h, const std::string& prefix, std::uint64_t count, std::size_t n_words) {
  for (std::size_t i = 0; i < n_words; ++i) h.counts[prefix + std::to_string(i)] = count;
}

std::set<std::string> Keys(const KeywordList& list) {
  std::set<std::string> out;
  for (const auto& [w, c] : list.surfaces) out.insert(w);
  return out;
}

}  // namespace

TEST_CASE("histogram counts documents, not occurrences") {
  const std::vector<std::vector<std::string>> lists = {{"a", "b", "b"}, {"b"}, {}};
  const auto h = BuildHistogram(lists);
  CHECK(h.total_documents == 3);
  CHECK(h.counts.at("a") == 1);
  CHECK(h.counts.at("b") == 2);

  KeywordHistogram left, right;
  left.AddDocument(lists[0]);
  right.AddDocument(lists[1]);
  right.AddDocument(lists[2]);
  left.Merge(right);
  CHECK(left == h);
}

TEST_CASE("min-count filter examples") {
  KeywordHistogram h;
  h.counts = {{"a", 1}, {"b", 2}};
  CHECK(Keys(ApplyMinCount(h, 2)) == std::set<std::string>{"b"});
  CHECK(Keys(ApplyMinCount(h, 1)) == std::set<std::string>{"a", "b"});
  CHECK(ApplyMinCount(h, 3).size() == 0);

  h.counts = {{"a", 7}, {"b", 8}, {"c", 20}};
  const auto list = ApplyMinCount(h, 8);
  CHECK(Keys(list) == std::set<std::string>{"b", "c"});
  CHECK(list.min_count == 8);
  CHECK(list.surfaces.at("c") == 20);

  // A keyword detected in 40 documents survives the cut; one-off noise does not.
  KeywordHistogram corpus;
  const std::vector<std::string> health = {"health"};
  for (int i = 0; i < 40; ++i) corpus.AddDocument(health);
  for (int i = 0; i < 30; ++i) {
    const std::vector<std::string> noise = {"noise" + std::to_string(i)};
    corpus.AddDocument(noise);
  }
  const auto kept = ApplyMinCount(corpus, 8);
  CHECK(Keys(kept) == std::set<std::string>{"health"});
  CHECK(kept.surfaces.at("health") == 40);
}

TEST_CASE("min-count filter matches enumeration and is monotone (property)") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    KeywordHistogram h;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) h.counts["w" + std::to_string(i)] = 1 + rng() % 25;
    std::set<std::string> previous;
    for (std::uint64_t m = 1; m <= 26; ++m) {
      const auto keep = Keys(ApplyMinCount(h, m));
      CHECK(keep == oracle::KeepSet(h.counts, m));
      if (m > 1) CHECK(std::includes(previous.begin(), previous.end(), keep.begin(), keep.end()));
      previous = keep;
    }
  }
}

TEST_CASE("knee at the collapse of the count spectrum") {
  KeywordHistogram h;
  Plant(h, "one", 1, 500);
  Plant(h, "two", 2, 40);
  Plant(h, "three", 3, 35);
  const auto k = KneeCandidates(h);
  CHECK_FALSE(k.degenerate);
  CHECK(k.knee == 2);
  CHECK(k.candidates == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("knee with a long singleton tail") {
  KeywordHistogram h;
  Plant(h, "a", 1, 10000);
  Plant(h, "b", 2, 9000);
  Plant(h, "e", 5, 100);
  Plant(h, "f", 6, 1);
  // Ratios: c=2 1.11, c=3 9000 (N(3) = 0 counts as 1), c=6 100.
  const auto k = KneeCandidates(h);
  CHECK(k.knee == 3);
  CHECK(k.candidates == std::vector<std::uint64_t>{2, 3, 4});
}

TEST_CASE("degenerate spectra") {
  KeywordHistogram flat;
  Plant(flat, "a", 1, 10);
  Plant(flat, "b", 2, 10);
  Plant(flat, "c", 3, 10);
  const auto k = KneeCandidates(flat);
  CHECK(k.degenerate);
  CHECK(k.candidates == std::vector<std::uint64_t>{1});

  KeywordHistogram single;
  Plant(single, "a", 4, 5);
  const auto s = KneeCandidates(single);
  CHECK(s.degenerate);
  CHECK(s.knee == 4);
  CHECK(s.candidates == std::vector<std::uint64_t>{4});

  CHECK_THROWS_AS(KneeCandidates(KeywordHistogram{}), ContractViolation);
}

TEST_CASE("frequency curve is the low-frequency tail") {
  KeywordHistogram h;
  h.counts = {{"zeta", 3}, {"alpha", 3}, {"beta", 9}, {"gamma", 1}, {"delta", 1}};
  const auto all = RankedKeywords(h);
  const std::vector<FreqCurveRow> expected = {
      {1, "beta", 9}, {2, "alpha", 3}, {3, "zeta", 3}, {4, "delta", 1}, {5, "gamma", 1}};
  CHECK(all == expected);
  const auto tail = FreqCurve(h, 2);
  CHECK(tail == std::vector<FreqCurveRow>{expected[3], expected[4]});
  CHECK(FreqCurve(h, 50) == expected);

  std::ostringstream out;
  WriteFreqCurveCsv(out, tail);
  CHECK(out.str() == "rank,surface,count\n4,delta,1\n5,gamma,1\n");

  keymask::testing::ScratchDir dir("curve");
  {
    std::ofstream f(dir / "curve.csv");
    WriteFreqCurveCsv(f, all);
  }
  CHECK(ReadFreqCurveCsv(dir / "curve.csv") == all);
}

TEST_CASE("keyword list TSV round trip") {
  KeywordHistogram h;
  h.counts = {{"b", 8}, {"c", 20}, {"a", 8}, {"d", 2}};
  const auto list = ApplyMinCount(h, 8);
  std::ostringstream out;
  WriteKeywordListTsv(out, list);
  CHECK(out.str() == "c\t20\na\t8\nb\t8\n");

  keymask::testing::ScratchDir dir("tsv");
  WriteKeywordListTsv(dir / "k.tsv", list);
  const auto back = ReadKeywordListTsv(dir / "k.tsv");
  CHECK(back.surfaces == list.surfaces);
  CHECK(back.min_count == 8);

  keymask::testing::WriteFile(dir / "dup.tsv", "a\t3\na\t4\n");
  CHECK_THROWS_AS(ReadKeywordListTsv(dir / "dup.tsv"), FormatError);
  keymask::testing::WriteFile(dir / "bad.tsv", "a\tx\n");
  CHECK_THROWS_AS(ReadKeywordListTsv(dir / "bad.tsv"), FormatError);
}
