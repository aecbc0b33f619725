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

#include "keymask/keyword_extract.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "keymask/error.hpp"
#include "keymask/parallel.hpp"

namespace keymask {

// Generated from data/stopwords_en.txt at configure time.
extern const char* const kDefaultStopwordsText;

namespace {

StopwordSet ParseStopwords(std::istream& in) {
  StopwordSet set;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    set.insert(ToLower(line.substr(first, last - first + 1)));
  }
  return set;
}

std::size_t CodePointLength(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

bool IsNumeric(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

bool IsZero(const EmbeddingVector& v) {
  return std::all_of(v.values().begin(), v.values().end(), [](double x) { return x == 0.0; });
}

}  // namespace

std::shared_ptr<const StopwordSet> DefaultStopwords() {
  static const std::shared_ptr<const StopwordSet> set = [] {
    std::istringstream in(kDefaultStopwordsText);
    return std::make_shared<const StopwordSet>(ParseStopwords(in));
  }();
  return set;
}

std::shared_ptr<const StopwordSet> LoadStopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword file '" + path.string() + "'");
  return std::make_shared<const StopwordSet>(ParseStopwords(in));
}

void ExtractionParams::Validate() const {
  if (top_k < 1) throw ConfigError("top_k must be at least 1");
  if (!(diversity >= 0.0 && diversity <= 1.0)) throw ConfigError("diversity must lie in [0, 1]");
  if (min_word_len < 1) throw ConfigError("min_word_len must be at least 1");
}

std::vector<std::string> CandidateUnigrams(std::span<const std::string> surfaces,
                                           const ExtractionParams& params) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& s : surfaces) {
    if (CodePointLength(s) < params.min_word_len || IsNumeric(s)) continue;
    if (params.stopwords && params.stopwords->contains(s)) continue;
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

std::vector<std::string> CandidateUnigrams(std::span<const WordSpan> words,
                                           const ExtractionParams& params) {
  std::vector<std::string> surfaces;
  surfaces.reserve(words.size());
  for (const auto& w : words) surfaces.push_back(w.surface);
  return CandidateUnigrams(surfaces, params);
}

std::vector<ScoredCandidate> RankCandidates(std::span<const std::string> candidates,
                                            const EmbeddingProvider& provider,
                                            const EmbeddingVector& doc_vector,
                                            std::vector<EmbeddingVector>* vectors_out) {
  auto vectors = provider.EmbedWords(candidates);
  struct Row {
    ScoredCandidate scored;
    EmbeddingVector vector;
  };
  std::vector<Row> rows;
  rows.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!vectors[i] || IsZero(*vectors[i])) continue;
    const double sim = CosineSimilarity(*vectors[i], doc_vector);
    rows.push_back({{candidates[i], sim}, std::move(*vectors[i])});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.scored.doc_similarity != b.scored.doc_similarity) {
      return a.scored.doc_similarity > b.scored.doc_similarity;
    }
    return a.scored.surface < b.scored.surface;
  });
  std::vector<ScoredCandidate> out;
  out.reserve(rows.size());
  if (vectors_out) {
    vectors_out->clear();
    vectors_out->reserve(rows.size());
  }
  for (auto& row : rows) {
    out.push_back(std::move(row.scored));
    if (vectors_out) vectors_out->push_back(std::move(row.vector));
  }
  return out;
}

std::vector<std::string> MmrSelect(std::span<const ScoredCandidate> scored,
                                   std::span<const EmbeddingVector> vectors,
                                   const ExtractionParams& params) {
  if (scored.size() != vectors.size()) {
    throw ContractViolation("MMR needs one vector per scored candidate");
  }
  const std::size_t n = scored.size();
  const double d = params.diversity;
  std::vector<bool> taken(n, false);
  std::vector<double> redundancy(n, -std::numeric_limits<double>::infinity());
  std::vector<std::string> selected;
  const std::size_t limit = std::min(params.top_k, n);
  selected.reserve(limit);

  auto better = [&](std::size_t i, double score_i, std::size_t j, double score_j) {
    if (score_i != score_j) return score_i > score_j;
    return scored[i].surface < scored[j].surface;
  };

  std::size_t last = n;
  while (selected.size() < limit) {
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      double score;
      if (last == n) {
        score = scored[i].doc_similarity;
      } else {
        redundancy[i] = std::max(redundancy[i], CosineSimilarity(vectors[i], vectors[last]));
        score = (1.0 - d) * scored[i].doc_similarity - d * redundancy[i];
      }
      if (best == n || better(i, score, best, best_score)) {
        best = i;
        best_score = score;
      }
    }
    taken[best] = true;
    last = best;
    selected.push_back(scored[best].surface);
  }
  return selected;
}

std::vector<std::string> MmrSelect(std::span<const ScoredCandidate> scored,
                                   const EmbeddingProvider& provider,
                                   const ExtractionParams& params) {
  std::vector<std::string> surfaces;
  surfaces.reserve(scored.size());
  for (const auto& s : scored) surfaces.push_back(s.surface);
  auto looked_up = provider.EmbedWords(surfaces);
  std::vector<ScoredCandidate> kept;
  std::vector<EmbeddingVector> vectors;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (!looked_up[i] || IsZero(*looked_up[i])) continue;
    kept.push_back(scored[i]);
    vectors.push_back(std::move(*looked_up[i]));
  }
  return MmrSelect(kept, vectors, params);
}

std::vector<std::string> ExtractDocumentKeywords(const Document& doc,
                                                 const EmbeddingProvider& provider,
                                                 const ExtractionParams& params) {
  const auto words = SegmentWords(doc.text);
  std::vector<std::string> surfaces;
  surfaces.reserve(words.size());
  for (const auto& w : words) surfaces.push_back(w.surface);
  const auto candidates = CandidateUnigrams(surfaces, params);
  if (candidates.empty()) return {};

  EmbeddingVector doc_vector;
  try {
    doc_vector = provider.EmbedDocument(doc.text, surfaces);
  } catch (const UnembeddableDocument&) {
    return {};
  }
  if (IsZero(doc_vector)) return {};

  std::vector<EmbeddingVector> vectors;
  const auto ranked = RankCandidates(candidates, provider, doc_vector, &vectors);
  return MmrSelect(ranked, vectors, params);
}

std::vector<std::vector<std::string>> ExtractKeywords(std::span<const Document> docs,
                                                      const EmbeddingProvider& provider,
                                                      const ExtractionParams& params,
                                                      unsigned threads) {
  params.Validate();
  std::vector<std::vector<std::string>> out(docs.size());
  ParallelFor(docs.size(), threads,
              [&](std::size_t i) { out[i] = ExtractDocumentKeywords(docs[i], provider, params); });
  return out;
}

}  // namespace keymask
