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

#include "keymask/corpus.hpp"

#include <nlohmann/json.hpp>

#include "keymask/error.hpp"

namespace keymask {
namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point at text[i]; sets len to the bytes consumed (1 for
// invalid sequences).
char32_t DecodeUtf8(std::string_view text, std::size_t i, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  std::size_t need;
  char32_t cp;
  if ((b0 & 0xE0) == 0xC0) {
    need = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    need = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    need = 4;
    cp = b0 & 0x07;
  } else {
    len = 1;
    return kInvalid;
  }
  if (i + need > text.size()) {
    len = 1;
    return kInvalid;
  }
  for (std::size_t k = 1; k < need; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      len = 1;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  // Reject overlong encodings and surrogates.
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[need] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    len = 1;
    return kInvalid;
  }
  len = need;
  return cp;
}

void EncodeUtf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool InRange(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

bool IsCombiningMark(char32_t cp) {
  return InRange(cp, 0x0300, 0x036F) || InRange(cp, 0x1AB0, 0x1AFF) ||
         InRange(cp, 0x1DC0, 0x1DFF) || InRange(cp, 0x20D0, 0x20FF) ||
         InRange(cp, 0xFE20, 0xFE2F);
}

// Word characters are letters, digits and combining marks. Outside ASCII
// this is approximated by excluding the whitespace, punctuation and symbol
// blocks.
bool IsWordChar(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (cp == kInvalid) return false;
  if (InRange(cp, 0x80, 0xBF)) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp == 0x037E || cp == 0x0387 || cp == 0x055D || cp == 0x0589 || cp == 0x05BE ||
      cp == 0x060C || cp == 0x061B || cp == 0x061F || cp == 0x06D4 || cp == 0x0964 ||
      cp == 0x0965 || cp == 0x1680 || cp == 0xFEFF) {
    return false;
  }
  if (InRange(cp, 0x2000, 0x2BFF)) {
    // Letterlike symbols and number forms stay word characters.
    return InRange(cp, 0x2100, 0x218F);
  }
  if (InRange(cp, 0x2E00, 0x2E7F) || InRange(cp, 0x3000, 0x303F) ||
      InRange(cp, 0xFE10, 0xFE1F) || InRange(cp, 0xFE30, 0xFE6F) ||
      InRange(cp, 0xFF00, 0xFF0F) || InRange(cp, 0xFF1A, 0xFF20) ||
      InRange(cp, 0xFF3B, 0xFF40) || InRange(cp, 0xFF5B, 0xFF65) ||
      InRange(cp, 0x1F000, 0x1FAFF)) {
    return false;
  }
  return true;
}

char32_t LowerCodePoint(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 0x20 : cp;
  if (InRange(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 0x20;
  if (InRange(cp, 0x0100, 0x017F)) {
    if (cp == 0x0130) return 'i';
    if (cp == 0x0178) return 0xFF;
    if (InRange(cp, 0x0139, 0x0148) || InRange(cp, 0x0179, 0x017E)) {
      return (cp % 2 == 1) ? cp + 1 : cp;
    }
    if (cp == 0x0131 || cp == 0x0138 || cp == 0x0149 || cp == 0x017F) return cp;
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (InRange(cp, 0x0391, 0x03AB) && cp != 0x03A2) return cp + 0x20;
  if (cp == 0x0386) return 0x03AC;
  if (InRange(cp, 0x0388, 0x038A)) return cp + 0x25;
  if (cp == 0x038C) return 0x03CC;
  if (InRange(cp, 0x038E, 0x038F)) return cp + 0x3F;
  if (InRange(cp, 0x0410, 0x042F)) return cp + 0x20;
  if (InRange(cp, 0x0400, 0x040F)) return cp + 0x50;
  return cp;
}

std::string Basename(const std::filesystem::path& path) { return path.filename().string(); }

}  // namespace

CorpusFormat ParseCorpusFormat(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "csv") return CorpusFormat::kCsv;
  throw ConfigError("unknown corpus format '" + std::string(name) + "' (expected jsonl or csv)");
}

std::string ToLower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len;
    const char32_t cp = DecodeUtf8(text, i, len);
    if (cp == kInvalid) {
      out.push_back(text[i]);
    } else {
      EncodeUtf8(LowerCodePoint(cp), out);
    }
    i += len;
  }
  return out;
}

std::vector<WordSpan> SegmentWords(std::string_view text) {
  std::vector<WordSpan> words;
  std::size_t run_start = 0;
  bool in_run = false;
  bool has_base = false;
  auto close = [&](std::size_t end) {
    if (in_run && has_base) {
      WordSpan w;
      w.surface = ToLower(text.substr(run_start, end - run_start));
      w.start = run_start;
      w.end = end;
      words.push_back(std::move(w));
    }
    in_run = false;
    has_base = false;
  };
  for (std::size_t i = 0; i < text.size();) {
    std::size_t len;
    const char32_t cp = DecodeUtf8(text, i, len);
    if (IsWordChar(cp)) {
      if (!in_run) {
        in_run = true;
        run_start = i;
      }
      if (!IsCombiningMark(cp)) has_base = true;
    } else {
      close(i);
    }
    i += len;
  }
  close(text.size());
  return words;
}

CorpusReader::CorpusReader(const std::filesystem::path& path, CorpusFormat format,
                           std::string text_field)
    : source_(path.string()),
      basename_(Basename(path)),
      format_(format),
      text_field_(std::move(text_field)),
      in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open corpus file '" + source_ + "'");
  if (format_ == CorpusFormat::kCsv) {
    csv_ = std::make_unique<CsvReader>(in_, source_);
    auto header = csv_->Next();
    if (!header) throw FormatError(source_, 1, "missing CSV header row");
    auto col = FindColumn(*header, text_field_);
    if (!col) throw FormatError(source_, 1, "no column named '" + text_field_ + "'");
    text_col_ = *col;
    id_col_ = FindColumn(*header, "id");
  }
}

void CorpusReader::Register(const std::string& id, std::size_t line) {
  if (id.empty()) throw FormatError(source_, line, "empty document id");
  if (!seen_ids_.insert(id).second) {
    throw FormatError(source_, line, "duplicate document id '" + id + "'");
  }
}

std::optional<Document> CorpusReader::Next() {
  return format_ == CorpusFormat::kJsonl ? NextJsonl() : NextCsv();
}

std::optional<Document> CorpusReader::NextJsonl() {
  std::string line;
  for (;;) {
    if (!std::getline(in_, line)) {
      if (in_.bad()) throw IoError("read failure on '" + source_ + "'");
      return std::nullopt;
    }
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) break;
  }
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(source_, line_, std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw FormatError(source_, line_, "expected a JSON object");
  auto text = obj.find(text_field_);
  if (text == obj.end() || !text->is_string()) {
    throw FormatError(source_, line_, "missing string field '" + text_field_ + "'");
  }
  Document doc;
  doc.text = text->get<std::string>();
  if (auto id = obj.find("id"); id != obj.end() && !id->is_null()) {
    if (!id->is_string()) throw FormatError(source_, line_, "field 'id' must be a string");
    doc.id = id->get<std::string>();
  } else {
    doc.id = basename_ + ":" + std::to_string(line_);
  }
  Register(doc.id, line_);
  return doc;
}

std::optional<Document> CorpusReader::NextCsv() {
  auto row = csv_->Next();
  if (!row) return std::nullopt;
  const std::size_t line = csv_->record_line();
  if (text_col_ >= row->size()) {
    throw FormatError(source_, line, "row has no '" + text_field_ + "' column");
  }
  Document doc;
  doc.text = std::move((*row)[text_col_]);
  if (id_col_ && *id_col_ < row->size() && !(*row)[*id_col_].empty()) {
    doc.id = (*row)[*id_col_];
  } else {
    doc.id = basename_ + ":" + std::to_string(line);
  }
  Register(doc.id, line);
  return doc;
}

std::vector<Document> LoadCorpus(const std::filesystem::path& path, CorpusFormat format,
                                 const std::string& text_field) {
  CorpusReader reader(path, format, text_field);
  std::vector<Document> docs;
  while (auto doc = reader.Next()) docs.push_back(std::move(*doc));
  return docs;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, SpecialTokens specials)
    : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.try_emplace(tokens_[i], static_cast<TokenId>(i));
  }
  auto require = [&](const std::string& token) {
    auto id = Find(token);
    if (!id) throw FormatError("vocabulary", 0, "missing special token '" + token + "'");
    return *id;
  };
  mask_id_ = require(specials.mask);
  unk_id_ = require(specials.unk);
  cls_id_ = require(specials.cls);
  sep_id_ = require(specials.sep);
  pad_id_ = require(specials.pad);
  const TokenId ids[] = {mask_id_, unk_id_, cls_id_, sep_id_, pad_id_};
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = a + 1; b < 5; ++b) {
      if (ids[a] == ids[b]) throw FormatError("vocabulary", 0, "special token ids must be distinct");
    }
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!IsSpecial(static_cast<TokenId>(i))) regular_ids_.push_back(static_cast<TokenId>(i));
  }
  if (regular_ids_.empty()) throw FormatError("vocabulary", 0, "no regular tokens");
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path, SpecialTokens specials) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocabulary file '" + path.string() + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(std::move(line));
  }
  if (tokens.empty()) throw FormatError(path.string(), 0, "empty vocabulary");
  return Vocabulary(std::move(tokens), std::move(specials));
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::IsSpecial(TokenId id) const noexcept {
  return id == mask_id_ || id == unk_id_ || id == cls_id_ || id == sep_id_ || id == pad_id_;
}

std::vector<TokenId> TokenizeWord(std::string_view word, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  std::string piece;
  std::size_t start = 0;
  while (start < word.size()) {
    std::optional<TokenId> match;
    std::size_t end = word.size();
    while (end > start) {
      // Only cut at code point boundaries.
      if (end < word.size() && (static_cast<unsigned char>(word[end]) & 0xC0) == 0x80) {
        --end;
        continue;
      }
      piece.clear();
      if (start > 0) piece = "##";
      piece.append(word.substr(start, end - start));
      match = vocab.Find(piece);
      if (match) break;
      --end;
    }
    if (!match) return {vocab.unk_id()};
    ids.push_back(*match);
    start = end;
  }
  if (ids.empty()) ids.push_back(vocab.unk_id());
  return ids;
}

TokenizedDocument TokenizeDocument(const Document& doc, const Vocabulary& vocab,
                                   std::size_t max_len) {
  if (max_len < 2) throw ContractViolation("max_len must be at least 2");
  TokenizedDocument out;
  out.doc_id = doc.id;
  out.input_ids.push_back(vocab.cls_id());
  for (WordSpan& word : SegmentWords(doc.text)) {
    word.token_ids = TokenizeWord(word.surface, vocab);
    // +1 reserves room for the trailing sep.
    if (out.input_ids.size() + word.token_ids.size() + 1 > max_len) break;
    out.word_offsets.push_back(out.input_ids.size());
    out.input_ids.insert(out.input_ids.end(), word.token_ids.begin(), word.token_ids.end());
    out.words.push_back(std::move(word));
  }
  out.input_ids.push_back(vocab.sep_id());
  return out;
}

}  // namespace keymask
