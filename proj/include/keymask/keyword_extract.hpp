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
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "keymask/corpus.hpp"
#include "keymask/embeddings.hpp"

namespace keymask {

using StopwordSet = std::unordered_set<std::string>;

/// The built-in English stopword list (data/stopwords_en.txt).
std::shared_ptr<const StopwordSet> DefaultStopwords();

/// One lowercased word per line; blank lines and lines starting with '#' are
/// ignored.
std::shared_ptr<const StopwordSet> LoadStopwords(const std::filesystem::path& path);

struct ExtractionParams {
  std::size_t top_k = 10;
  /// MMR trade-off: 0 ranks purely by relevance, 1 purely by novelty.
  double diversity = 0.8;
  /// Minimum surface length in code points.
  std::size_t min_word_len = 2;
  std::shared_ptr<const StopwordSet> stopwords = DefaultStopwords();

  /// Throws ConfigError when top_k < 1 or diversity is outside [0, 1].
  void Validate() const;
};

struct ScoredCandidate {
  std::string surface;
  double doc_similarity = 0.0;

  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

/// Unique surfaces in order of first occurrence, minus stopwords, short
/// surfaces and purely numeric surfaces.
std::vector<std::string> CandidateUnigrams(std::span<const std::string> surfaces,
                                           const ExtractionParams& params);
std::vector<std::string> CandidateUnigrams(std::span<const WordSpan> words,
                                           const ExtractionParams& params);

/// Candidates the provider covers, scored by cosine similarity to
/// `doc_vector` and sorted by similarity descending, then surface ascending.
/// Candidates whose vector is all zeros are dropped with the uncovered ones.
/// When `vectors_out` is non-null it receives the vector of each result row.
std::vector<ScoredCandidate> RankCandidates(std::span<const std::string> candidates,
                                            const EmbeddingProvider& provider,
                                            const EmbeddingVector& doc_vector,
                                            std::vector<EmbeddingVector>* vectors_out = nullptr);

/// Greedy Maximal Marginal Relevance selection.
///
/// The first pick is the most document-similar candidate. Each later pick
/// maximizes
///   (1 - diversity) * doc_similarity(c) - diversity * max_{s in selected} cos(c, s)
/// Exact score ties go to the lexicographically smaller surface, so the
/// result does not depend on the input order. `vectors[i]` belongs to
/// `scored[i]`.
std::vector<std::string> MmrSelect(std::span<const ScoredCandidate> scored,
                                   std::span<const EmbeddingVector> vectors,
                                   const ExtractionParams& params);

/// As above, looking the candidate vectors up in `provider`. Candidates the
/// provider does not cover are skipped.
std::vector<std::string> MmrSelect(std::span<const ScoredCandidate> scored,
                                   const EmbeddingProvider& provider,
                                   const ExtractionParams& params);

/// segment -> candidates -> document vector -> rank -> MMR. Returns an empty
/// list for documents with no candidates or no embeddable words. Only
/// provider transport errors propagate.
std::vector<std::string> ExtractDocumentKeywords(const Document& doc,
                                                 const EmbeddingProvider& provider,
                                                 const ExtractionParams& params);

/// Per-document keyword lists for a batch, computed on `threads` workers.
/// Output order matches `docs`.
std::vector<std::vector<std::string>> ExtractKeywords(std::span<const Document> docs,
                                                      const EmbeddingProvider& provider,
                                                      const ExtractionParams& params,
                                                      unsigned threads);

}  // namespace keymask
