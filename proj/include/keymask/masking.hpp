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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keymask/corpus.hpp"
#include "keymask/keyword_filter.hpp"

namespace keymask {

/// Label value for positions excluded from the MLM loss.
inline constexpr std::int32_t kIgnoreLabel = -100;

enum class MaskingMode { kKeyword, kRandom };

std::string_view ToString(MaskingMode mode);
MaskingMode ParseMaskingMode(std::string_view name);

struct MaskingConfig {
  MaskingMode mode = MaskingMode::kKeyword;
  /// Per-word selection probability.
  double select_prob = 0.75;
  double mask_rate = 0.8;
  double random_rate = 0.1;
  double keep_rate = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_len = 512;

  /// 0.75 for keyword masking, 0.15 for the random baseline.
  static double DefaultSelectProb(MaskingMode mode);
  static MaskingConfig Defaults(MaskingMode mode);

  /// Throws ConfigError when the action rates do not sum to 1, a rate is
  /// negative, select_prob is outside (0, 1], or max_len < 2.
  void Validate() const;
};

enum class MaskAction { kMask, kRandom, kKeep };

struct ActionCounts {
  std::uint64_t mask = 0;
  std::uint64_t random = 0;
  std::uint64_t keep = 0;

  void Add(const ActionCounts& o) {
    mask += o.mask;
    random += o.random;
    keep += o.keep;
  }
  std::uint64_t total() const { return mask + random + keep; }
  friend bool operator==(const ActionCounts&, const ActionCounts&) = default;
};

struct MaskedExample {
  std::string doc_id;
  std::vector<TokenId> input_ids;
  /// Original id at positions of selected words, kIgnoreLabel elsewhere.
  std::vector<std::int32_t> labels;

  friend bool operator==(const MaskedExample&, const MaskedExample&) = default;
};

struct MaskOutcome {
  MaskedExample example;
  std::uint64_t words_eligible = 0;
  std::uint64_t words_selected = 0;
  ActionCounts actions;
};

/// Indices into tdoc.words whose surface is a keyword (exact match).
std::vector<std::size_t> FindKeywordWords(const TokenizedDocument& tdoc, const KeywordList& keywords);

/// Every word index of the document (the random-masking eligibility set).
std::vector<std::size_t> AllWords(const TokenizedDocument& tdoc);

/// Whole-word masking of the eligible words.
///
/// Randomness comes from a stream keyed by (cfg.seed, doc_id). Per eligible
/// word, in ascending index order: one draw decides selection with
/// probability select_prob; a selected word draws one action (mask / random
/// / keep) for all of its pieces; the random action then draws a regular
/// vocabulary id per piece. Throws ContractViolation for an out-of-range
/// word index.
MaskOutcome MaskExample(const TokenizedDocument& tdoc, std::span<const std::size_t> eligible_words,
                        const MaskingConfig& cfg, const Vocabulary& vocab);

struct EmissionSummary {
  std::uint64_t documents = 0;
  std::uint64_t words_eligible = 0;
  std::uint64_t words_selected = 0;
  ActionCounts actions;
  /// Total emitted input ids and the number of labels != kIgnoreLabel.
  std::uint64_t tokens = 0;
  std::uint64_t labeled_tokens = 0;

  friend bool operator==(const EmissionSummary&, const EmissionSummary&) = default;
};

/// Serializes one example as a JSONL line (without the trailing newline):
/// {"doc_id": ..., "input_ids": [...], "labels": [...]}
std::string ToJsonLine(const MaskedExample& example);
MaskedExample ParseJsonLine(std::string_view line);

/// Sidecar path for a dataset file: `<dataset>.meta.json`.
std::filesystem::path SidecarPath(const std::filesystem::path& dataset);

/// The sidecar metadata document for a run, as serialized JSON.
std::string SidecarJson(const MaskingConfig& cfg, const std::string& vocab_file);

/// Document source for EmitDataset; returns nullopt when exhausted.
using DocumentSource = std::function<std::optional<Document>()>;

struct EmitOptions {
  unsigned threads = 1;
  /// Documents tokenized and masked per parallel batch.
  std::size_t batch_size = 4096;
  /// Recorded in the sidecar.
  std::string vocab_file;
};

/// Tokenizes, masks and writes every document in corpus order, plus the
/// sidecar. `keywords` must be set in keyword mode and absent in random
/// mode. Documents without eligible words are still written.
EmissionSummary EmitDataset(const DocumentSource& corpus, const Vocabulary& vocab,
                            const KeywordList* keywords, const MaskingConfig& cfg,
                            const std::filesystem::path& out_path, const EmitOptions& options);

std::string SummaryJson(const EmissionSummary& summary);

}  // namespace keymask
