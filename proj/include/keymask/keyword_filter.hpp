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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace keymask {

/// Corpus-wide detection counts: counts[w] is the number of documents whose
/// keyword list contains w.
struct KeywordHistogram {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total_documents = 0;

  /// Adds one document's keyword list. Repeats within a list count once.
  void AddDocument(std::span<const std::string> keywords);
  /// Merges partial counts from another shard.
  void Merge(const KeywordHistogram& other);

  friend bool operator==(const KeywordHistogram&, const KeywordHistogram&) = default;
};

KeywordHistogram BuildHistogram(std::span<const std::vector<std::string>> per_doc_keywords);

/// Surfaces kept by a frequency cut-off, with their detection counts.
struct KeywordList {
  std::map<std::string, std::uint64_t> surfaces;
  std::uint64_t min_count = 1;

  bool Contains(const std::string& surface) const { return surfaces.contains(surface); }
  std::size_t size() const noexcept { return surfaces.size(); }
};

/// Keeps exactly the words detected in at least `min_count` documents.
KeywordList ApplyMinCount(const KeywordHistogram& hist, std::uint64_t min_count);

struct KneeResult {
  /// Ascending, deduplicated, each >= 1; one to three values.
  std::vector<std::uint64_t> candidates;
  /// The chosen cut-off, or the only count when degenerate.
  std::uint64_t knee = 1;
  /// True when the curve has no leap to cut at.
  bool degenerate = false;
};

/// Proposes cut-offs around the point where the count spectrum collapses.
///
/// With N(c) the number of distinct words detected exactly c times, the knee
/// is the smallest c >= 2 within the observed count range that maximizes
/// N(c-1) / max(N(c), 1). Candidates are {knee-1, knee, knee+1} clamped to
/// >= 1. A histogram with a single distinct count, or whose best ratio does
/// not exceed 1, is degenerate and yields its smallest observed count alone.
/// Throws ContractViolation on an empty histogram.
KneeResult KneeCandidates(const KeywordHistogram& hist);

struct FreqCurveRow {
  std::size_t rank = 0;  // 1-based position in the descending ordering
  std::string surface;
  std::uint64_t count = 0;

  friend bool operator==(const FreqCurveRow&, const FreqCurveRow&) = default;
};

/// All words ordered by count descending, then surface ascending.
std::vector<FreqCurveRow> RankedKeywords(const KeywordHistogram& hist);

/// The last `last_n` rows of RankedKeywords (the low-frequency tail).
std::vector<FreqCurveRow> FreqCurve(const KeywordHistogram& hist, std::size_t last_n = 50);

/// CSV with header `rank,surface,count`.
void WriteFreqCurveCsv(std::ostream& out, std::span<const FreqCurveRow> rows);
std::vector<FreqCurveRow> ReadFreqCurveCsv(const std::filesystem::path& path);

/// TSV `surface<TAB>count`, count descending then surface ascending.
void WriteKeywordListTsv(std::ostream& out, const KeywordList& list);
void WriteKeywordListTsv(const std::filesystem::path& path, const KeywordList& list);
/// Reads a keyword list file; min_count is recovered as the smallest count.
KeywordList ReadKeywordListTsv(const std::filesystem::path& path);

}  // namespace keymask
