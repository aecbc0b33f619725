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

#include "keymask/masking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "keymask/error.hpp"
#include "keymask/parallel.hpp"
#include "keymask/rng.hpp"

namespace keymask {

std::string_view ToString(MaskingMode mode) {
  return mode == MaskingMode::kKeyword ? "keyword" : "random";
}

MaskingMode ParseMaskingMode(std::string_view name) {
  if (name == "keyword") return MaskingMode::kKeyword;
  if (name == "random") return MaskingMode::kRandom;
  throw ConfigError("unknown masking mode '" + std::string(name) + "' (expected keyword or random)");
}

double MaskingConfig::DefaultSelectProb(MaskingMode mode) {
  return mode == MaskingMode::kKeyword ? 0.75 : 0.15;
}

MaskingConfig MaskingConfig::Defaults(MaskingMode mode) {
  MaskingConfig cfg;
  cfg.mode = mode;
  cfg.select_prob = DefaultSelectProb(mode);
  return cfg;
}

void MaskingConfig::Validate() const {
  if (!(select_prob > 0.0 && select_prob <= 1.0)) throw ConfigError("select_prob must lie in (0, 1]");
  for (double r : {mask_rate, random_rate, keep_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("action rates must lie in [0, 1]");
  }
  if (std::abs(mask_rate + random_rate + keep_rate - 1.0) > 1e-9) {
    throw ConfigError("mask_rate + random_rate + keep_rate must equal 1");
  }
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
}

std::vector<std::size_t> FindKeywordWords(const TokenizedDocument& tdoc,
                                          const KeywordList& keywords) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tdoc.words.size(); ++i) {
    if (keywords.Contains(tdoc.words[i].surface)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> AllWords(const TokenizedDocument& tdoc) {
  std::vector<std::size_t> out(tdoc.words.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

MaskOutcome MaskExample(const TokenizedDocument& tdoc, std::span<const std::size_t> eligible_words,
                        const MaskingConfig& cfg, const Vocabulary& vocab) {
  if (tdoc.word_offsets.size() != tdoc.words.size()) {
    throw ContractViolation("tokenized document has misaligned word offsets");
  }
  std::vector<std::size_t> eligible(eligible_words.begin(), eligible_words.end());
  std::sort(eligible.begin(), eligible.end());
  eligible.erase(std::unique(eligible.begin(), eligible.end()), eligible.end());
  if (!eligible.empty() && eligible.back() >= tdoc.words.size()) {
    throw ContractViolation("word index " + std::to_string(eligible.back()) + " out of range for '" +
                            tdoc.doc_id + "' with " + std::to_string(tdoc.words.size()) + " words");
  }

  MaskOutcome out;
  out.example.doc_id = tdoc.doc_id;
  out.example.input_ids = tdoc.input_ids;
  out.example.labels.assign(tdoc.input_ids.size(), kIgnoreLabel);
  out.words_eligible = eligible.size();

  const auto regular = vocab.regular_ids();
  auto rng = CounterRng::ForDocument(cfg.seed, tdoc.doc_id);
  for (std::size_t w : eligible) {
    if (!rng.Bernoulli(cfg.select_prob)) continue;
    ++out.words_selected;
    const double u = rng.NextUnit();
    const MaskAction action = u < cfg.mask_rate                     ? MaskAction::kMask
                              : u < cfg.mask_rate + cfg.random_rate ? MaskAction::kRandom
                                                                    : MaskAction::kKeep;
    const std::size_t begin = tdoc.word_offsets[w];
    const std::size_t end = begin + tdoc.words[w].token_ids.size();
    for (std::size_t pos = begin; pos < end; ++pos) {
      out.example.labels[pos] = tdoc.input_ids[pos];
      switch (action) {
        case MaskAction::kMask:
          out.example.input_ids[pos] = vocab.mask_id();
          break;
        case MaskAction::kRandom:
          out.example.input_ids[pos] = regular[rng.NextBelow(regular.size())];
          break;
        case MaskAction::kKeep:
          break;
      }
    }
    switch (action) {
      case MaskAction::kMask: ++out.actions.mask; break;
      case MaskAction::kRandom: ++out.actions.random; break;
      case MaskAction::kKeep: ++out.actions.keep; break;
    }
  }
  return out;
}

std::string ToJsonLine(const MaskedExample& example) {
  std::string line = "{\"doc_id\":";
  line += nlohmann::json(example.doc_id).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  auto append_ints = [&line](const auto& values) {
    line.push_back('[');
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line.push_back(',');
      line += std::to_string(values[i]);
    }
    line.push_back(']');
  };
  line += ",\"input_ids\":";
  append_ints(example.input_ids);
  line += ",\"labels\":";
  append_ints(example.labels);
  line.push_back('}');
  return line;
}

MaskedExample ParseJsonLine(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("", 0, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("doc_id") || !j.contains("input_ids") || !j.contains("labels") ||
      !j["doc_id"].is_string() || !j["input_ids"].is_array() || !j["labels"].is_array()) {
    throw FormatError("", 0, "expected {\"doc_id\": str, \"input_ids\": [int], \"labels\": [int]}");
  }
  MaskedExample ex;
  ex.doc_id = j["doc_id"].get<std::string>();
  ex.input_ids = j["input_ids"].get<std::vector<TokenId>>();
  ex.labels = j["labels"].get<std::vector<std::int32_t>>();
  if (ex.input_ids.size() != ex.labels.size()) {
    throw FormatError("", 0, "input_ids and labels differ in length");
  }
  return ex;
}

std::filesystem::path SidecarPath(const std::filesystem::path& dataset) {
  return std::filesystem::path(dataset.string() + ".meta.json");
}

std::string SidecarJson(const MaskingConfig& cfg, const std::string& vocab_file) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(ToString(cfg.mode));
  j["select_prob"] = cfg.select_prob;
  j["mask_rate"] = cfg.mask_rate;
  j["random_rate"] = cfg.random_rate;
  j["keep_rate"] = cfg.keep_rate;
  j["seed"] = cfg.seed;
  j["vocab_file"] = vocab_file;
  j["scheduler_hint"] = cfg.mode == MaskingMode::kKeyword ? "constant" : "linear";
  j["max_len"] = cfg.max_len;
  j["ignore_index"] = kIgnoreLabel;
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

EmissionSummary EmitDataset(const DocumentSource& corpus, const Vocabulary& vocab,
                            const KeywordList* keywords, const MaskingConfig& cfg,
                            const std::filesystem::path& out_path, const EmitOptions& options) {
  cfg.Validate();
  if (cfg.mode == MaskingMode::kKeyword && keywords == nullptr) {
    throw ConfigError("keyword masking requires a keyword list");
  }
  if (cfg.mode == MaskingMode::kRandom && keywords != nullptr) {
    throw ConfigError("random masking does not take a keyword list");
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dataset '" + out_path.string() + "'");

  EmissionSummary summary;
  const std::size_t batch_size = std::max<std::size_t>(options.batch_size, 1);
  std::vector<Document> batch;
  std::vector<std::string> lines;
  std::vector<MaskOutcome> outcomes;
  for (;;) {
    batch.clear();
    while (batch.size() < batch_size) {
      auto doc = corpus();
      if (!doc) break;
      batch.push_back(std::move(*doc));
    }
    if (batch.empty()) break;
    lines.assign(batch.size(), {});
    outcomes.assign(batch.size(), {});
    ParallelFor(batch.size(), options.threads, [&](std::size_t i) {
      const TokenizedDocument tdoc = TokenizeDocument(batch[i], vocab, cfg.max_len);
      const auto eligible =
          cfg.mode == MaskingMode::kKeyword ? FindKeywordWords(tdoc, *keywords) : AllWords(tdoc);
      outcomes[i] = MaskExample(tdoc, eligible, cfg, vocab);
      lines[i] = ToJsonLine(outcomes[i].example);
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out << lines[i] << '\n';
      const MaskOutcome& o = outcomes[i];
      ++summary.documents;
      summary.words_eligible += o.words_eligible;
      summary.words_selected += o.words_selected;
      summary.actions.Add(o.actions);
      summary.tokens += o.example.input_ids.size();
      summary.labeled_tokens += static_cast<std::uint64_t>(std::count_if(
          o.example.labels.begin(), o.example.labels.end(), [](auto l) { return l != kIgnoreLabel; }));
    }
  }
  if (!out.flush()) throw IoError("write failure on '" + out_path.string() + "'");
  out.close();

  const auto sidecar = SidecarPath(out_path);
  std::ofstream meta(sidecar, std::ios::binary | std::ios::trunc);
  if (!meta) throw IoError("cannot write sidecar '" + sidecar.string() + "'");
  meta << SidecarJson(cfg, options.vocab_file);
  if (!meta.flush()) throw IoError("write failure on '" + sidecar.string() + "'");
  return summary;
}

std::string SummaryJson(const EmissionSummary& s) {
  nlohmann::ordered_json j;
  j["documents"] = s.documents;
  j["words_eligible"] = s.words_eligible;
  j["words_selected"] = s.words_selected;
  j["actions"] = {{"mask", s.actions.mask}, {"random", s.actions.random}, {"keep", s.actions.keep}};
  j["tokens"] = s.tokens;
  j["labeled_tokens"] = s.labeled_tokens;
  return j.dump();
}

}  // namespace keymask
