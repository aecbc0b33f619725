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
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "keymask/csv.hpp"

namespace keymask {

using TokenId = std::int32_t;

struct Document {
  std::string id;
  std::string text;
};

/// One word of a document: its lowercased surface, byte offsets into the
/// original text, and (after tokenization) its subword ids.
struct WordSpan {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
  std::vector<TokenId> token_ids;
};

enum class CorpusFormat { kJsonl, kCsv };

CorpusFormat ParseCorpusFormat(std::string_view name);

/// Streams documents from a JSONL or CSV file in file order.
///
/// JSONL lines are objects carrying the text field and an optional string
/// `id`; CSV files carry a header row naming the text column and optionally
/// an `id` column. Missing ids are synthesized as `<filename>:<line>`.
/// Ids must be unique across the corpus.
class CorpusReader {
 public:
  CorpusReader(const std::filesystem::path& path, CorpusFormat format,
               std::string text_field);

  std::optional<Document> Next();

 private:
  std::optional<Document> NextJsonl();
  std::optional<Document> NextCsv();
  void Register(const std::string& id, std::size_t line);

  std::string source_;
  std::string basename_;
  CorpusFormat format_;
  std::string text_field_;
  std::ifstream in_;
  std::size_t line_ = 0;
  std::unique_ptr<CsvReader> csv_;
  std::size_t text_col_ = 0;
  std::optional<std::size_t> id_col_;
  std::unordered_set<std::string> seen_ids_;
};

std::vector<Document> LoadCorpus(const std::filesystem::path& path, CorpusFormat format,
                                 const std::string& text_field);

/// Splits text into words at unicode whitespace and punctuation, lowercasing
/// surfaces and dropping runs with no letters or digits. Offsets are byte
/// offsets into `text`. Invalid UTF-8 bytes act as separators.
std::vector<WordSpan> SegmentWords(std::string_view text);

/// Lowercases UTF-8 text using simple one-to-one case mappings (ASCII, Latin-1,
/// Latin Extended-A, Greek, Cyrillic). Other code points pass through.
std::string ToLower(std::string_view text);

struct SpecialTokens {
  std::string mask = "[MASK]";
  std::string unk = "[UNK]";
  std::string cls = "[CLS]";
  std::string sep = "[SEP]";
  std::string pad = "[PAD]";
};

/// Subword vocabulary: one token per line, id = 0-based line number.
/// Continuation pieces carry a "##" prefix.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> tokens, SpecialTokens specials = {});

  static Vocabulary Load(const std::filesystem::path& path, SpecialTokens specials = {});

  std::optional<TokenId> Find(std::string_view token) const;
  const std::string& Token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return tokens_.size(); }

  TokenId mask_id() const noexcept { return mask_id_; }
  TokenId unk_id() const noexcept { return unk_id_; }
  TokenId cls_id() const noexcept { return cls_id_; }
  TokenId sep_id() const noexcept { return sep_id_; }
  TokenId pad_id() const noexcept { return pad_id_; }

  bool IsSpecial(TokenId id) const noexcept;

  /// Every id that is not one of the five special tokens, ascending.
  std::span<const TokenId> regular_ids() const noexcept { return regular_ids_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> index_;
  std::vector<TokenId> regular_ids_;
  TokenId mask_id_ = 0;
  TokenId unk_id_ = 0;
  TokenId cls_id_ = 0;
  TokenId sep_id_ = 0;
  TokenId pad_id_ = 0;
};

/// Greedy longest-match-first subword split. Returns {unk_id} when some
/// suffix of the word has no matching piece.
std::vector<TokenId> TokenizeWord(std::string_view word, const Vocabulary& vocab);

struct TokenizedDocument {
  std::string doc_id;
  /// cls, word pieces, sep.
  std::vector<TokenId> input_ids;
  /// Words kept after truncation, with token_ids filled.
  std::vector<WordSpan> words;
  /// words[i]'s pieces occupy input_ids[word_offsets[i], word_offsets[i] + words[i].token_ids.size()).
  std::vector<std::size_t> word_offsets;
};

/// Tokenizes a whole document, truncating at word boundaries so the result
/// (including cls/sep) has at most max_len ids. max_len must be >= 2.
TokenizedDocument TokenizeDocument(const Document& doc, const Vocabulary& vocab,
                                   std::size_t max_len);

}  // namespace keymask
