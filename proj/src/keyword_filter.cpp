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

#include "keymask/keyword_filter.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "keymask/csv.hpp"
#include "keymask/error.hpp"

namespace keymask {

void KeywordHistogram::AddDocument(std::span<const std::string> keywords) {
  std::set<std::string_view> unique(keywords.begin(), keywords.end());
  for (auto w : unique) ++counts[std::string(w)];
  ++total_documents;
}

void KeywordHistogram::Merge(const KeywordHistogram& other) {
  for (const auto& [w, c] : other.counts) counts[w] += c;
  total_documents += other.total_documents;
}

KeywordHistogram BuildHistogram(std::span<const std::vector<std::string>> per_doc_keywords) {
  KeywordHistogram hist;
  for (const auto& list : per_doc_keywords) hist.AddDocument(list);
  return hist;
}

KeywordList ApplyMinCount(const KeywordHistogram& hist, std::uint64_t min_count) {
  if (min_count < 1) throw ContractViolation("min_count must be at least 1");
  KeywordList list;
  list.min_count = min_count;
  for (const auto& [w, c] : hist.counts) {
    if (c >= min_count) list.surfaces.emplace(w, c);
  }
  return list;
}

KneeResult KneeCandidates(const KeywordHistogram& hist) {
  if (hist.counts.empty()) throw ContractViolation("knee detection needs a non-empty histogram");
  std::map<std::uint64_t, std::uint64_t> spectrum;  // count -> N(count)
  for (const auto& [w, c] : hist.counts) ++spectrum[c];
  const std::uint64_t lo = spectrum.begin()->first;
  const std::uint64_t hi = spectrum.rbegin()->first;

  KneeResult result;
  auto n_at = [&](std::uint64_t c) -> std::uint64_t {
    auto it = spectrum.find(c);
    return it == spectrum.end() ? 0 : it->second;
  };
  double best_ratio = 0.0;
  std::uint64_t best_c = 0;
  for (std::uint64_t c = std::max<std::uint64_t>(2, lo); c <= hi; ++c) {
    const double ratio =
        static_cast<double>(n_at(c - 1)) / static_cast<double>(std::max<std::uint64_t>(n_at(c), 1));
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best_c = c;
    }
  }
  if (spectrum.size() == 1 || best_ratio <= 1.0) {
    result.degenerate = true;
    result.knee = lo;
    result.candidates = {lo};
    return result;
  }
  result.knee = best_c;
  std::set<std::uint64_t> points = {std::max<std::uint64_t>(best_c - 1, 1), best_c, best_c + 1};
  result.candidates.assign(points.begin(), points.end());
  return result;
}

std::vector<FreqCurveRow> RankedKeywords(const KeywordHistogram& hist) {
  std::vector<FreqCurveRow> rows;
  rows.reserve(hist.counts.size());
  for (const auto& [w, c] : hist.counts) rows.push_back({0, w, c});
  // counts is a std::map, so a stable sort by count keeps surfaces ascending.
  std::stable_sort(rows.begin(), rows.end(),
                   [](const FreqCurveRow& a, const FreqCurveRow& b) { return a.count > b.count; });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
  return rows;
}

std::vector<FreqCurveRow> FreqCurve(const KeywordHistogram& hist, std::size_t last_n) {
  auto rows = RankedKeywords(hist);
  if (rows.size() > last_n) rows.erase(rows.begin(), rows.end() - static_cast<std::ptrdiff_t>(last_n));
  return rows;
}

void WriteFreqCurveCsv(std::ostream& out, std::span<const FreqCurveRow> rows) {
  out << "rank,surface,count\n";
  for (const auto& r : rows) out << r.rank << ',' << CsvEscape(r.surface) << ',' << r.count << '\n';
}

namespace {

template <typename T>
T ParseUnsigned(const std::string& field, const std::string& source, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError(source, line, "expected a non-negative integer, found '" + field + "'");
  }
  return value;
}

}  // namespace

std::vector<FreqCurveRow> ReadFreqCurveCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open frequency curve '" + path.string() + "'");
  CsvReader reader(in, path.string());
  auto header = reader.Next();
  if (!header) throw FormatError(path.string(), 1, "missing header");
  const auto rank_col = FindColumn(*header, "rank");
  const auto surface_col = FindColumn(*header, "surface");
  const auto count_col = FindColumn(*header, "count");
  if (!rank_col || !surface_col || !count_col) {
    throw FormatError(path.string(), 1, "header must contain rank,surface,count");
  }
  std::vector<FreqCurveRow> rows;
  while (auto rec = reader.Next()) {
    const std::size_t need = std::max({*rank_col, *surface_col, *count_col});
    if (rec->size() <= need) throw FormatError(path.string(), reader.record_line(), "short row");
    rows.push_back({ParseUnsigned<std::size_t>((*rec)[*rank_col], path.string(), reader.record_line()),
                    (*rec)[*surface_col],
                    ParseUnsigned<std::uint64_t>((*rec)[*count_col], path.string(),
                                                 reader.record_line())});
  }
  return rows;
}

void WriteKeywordListTsv(std::ostream& out, const KeywordList& list) {
  KeywordHistogram as_hist;
  as_hist.counts = list.surfaces;
  for (const auto& row : RankedKeywords(as_hist)) out << row.surface << '\t' << row.count << '\n';
}

void WriteKeywordListTsv(const std::filesystem::path& path, const KeywordList& list) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write keyword list '" + path.string() + "'");
  WriteKeywordListTsv(out, list);
  if (!out.flush()) throw IoError("write failure on '" + path.string() + "'");
}

KeywordList ReadKeywordListTsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open keyword list '" + path.string() + "'");
  KeywordList list;
  std::uint64_t smallest = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(path.string(), line_no, "expected 'surface<TAB>count'");
    }
    const auto count = ParseUnsigned<std::uint64_t>(line.substr(tab + 1), path.string(), line_no);
    if (!list.surfaces.emplace(line.substr(0, tab), count).second) {
      throw FormatError(path.string(), line_no, "duplicate keyword '" + line.substr(0, tab) + "'");
    }
    smallest = list.surfaces.size() == 1 ? count : std::min(smallest, count);
  }
  list.min_count = std::max<std::uint64_t>(smallest, 1);
  return list;
}

}  // namespace keymask
