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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "keymask/corpus.hpp"
#include "keymask/embeddings.hpp"
#include "keymask/keyword_extract.hpp"
#include "keymask/keyword_filter.hpp"
#include "keymask/masking.hpp"

namespace keymask {

struct CorpusSpec {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::kJsonl;
  std::string text_field = "text";
};

/// Exactly one of static_table / remote_url is set.
struct EmbeddingSpec {
  std::optional<std::filesystem::path> static_table;
  std::optional<std::string> remote_url;
  RemoteOptions remote;
};

/// Everything a pipeline run needs. Serialized as JSON:
///
///   {
///     "corpus": {"path": "...", "format": "jsonl", "text_field": "text"},
///     "vocab": "vocab.txt",
///     "embeddings": {"static_table": "vectors.txt"}
///                 | {"remote_url": "http://host:port", "timeout_ms": 30000,
///                    "max_retries": 3, "max_in_flight": 4, "batch_size": 256},
///     "extraction": {"top_k": 10, "diversity": 0.8, "min_word_len": 2,
///                    "stopwords": null},
///     "masking": {"mode": "keyword", "select_prob": 0.75, "mask_rate": 0.8,
///                 "random_rate": 0.1, "keep_rate": 0.1, "seed": 0,
///                 "max_len": 512},
///     "output_dir": "out",
///     "threads": 0
///   }
///
/// Relative paths resolve against the config file's directory. Omitted keys
/// take the defaults shown; select_prob defaults to 0.15 in random mode.
struct PipelineConfig {
  CorpusSpec corpus;
  std::filesystem::path vocab;
  EmbeddingSpec embeddings;
  ExtractionParams extraction;
  std::optional<std::filesystem::path> stopwords;
  MaskingConfig masking;
  std::filesystem::path output_dir = "out";
  /// 0 = KEYMASK_THREADS or hardware concurrency.
  unsigned threads = 0;
};

PipelineConfig ParseConfig(const std::string& json_text, const std::filesystem::path& base_dir);
PipelineConfig LoadConfig(const std::filesystem::path& path);

/// Throws ConfigError unless exactly one embedding backend is configured.
void ValidateEmbeddingSpec(const EmbeddingSpec& spec);
/// Creates output_dir if needed and checks that it accepts files.
void EnsureWritableDir(const std::filesystem::path& dir);

std::unique_ptr<EmbeddingProvider> OpenProvider(const EmbeddingSpec& spec);

/// Per-document keyword lists: JSONL `{"doc_id": str, "keywords": [str, ...]}`.
struct DocumentKeywords {
  std::string doc_id;
  std::vector<std::string> keywords;
};

std::string KeywordsJsonLine(const DocumentKeywords& entry);
std::vector<DocumentKeywords> ReadKeywordsJsonl(const std::filesystem::path& path);

struct ExtractRun {
  std::uint64_t documents = 0;
  std::uint64_t keywords = 0;
  double seconds = 0.0;
};

/// Extracts keywords for every corpus document into `out_path`, in corpus
/// order.
ExtractRun RunExtract(const PipelineConfig& cfg, const EmbeddingProvider& provider,
                      const std::filesystem::path& out_path);

struct FilterRun {
  KeywordHistogram histogram;
  std::optional<KneeResult> knee;  // set in auto mode
  std::vector<std::uint64_t> thresholds;
  std::vector<std::filesystem::path> list_files;
  std::vector<std::size_t> list_sizes;
  std::filesystem::path curve_file;
};

/// Builds the histogram and writes one keyword list per threshold
/// (`keywords.min<N>.tsv`) plus `freq_curve.csv` into `out_dir`. With
/// `min_count` unset the knee candidates are used.
FilterRun RunFilter(const std::filesystem::path& keywords_file,
                    std::optional<std::uint64_t> min_count, const std::filesystem::path& out_dir,
                    std::size_t last_n = 50);

std::filesystem::path KeywordListFileName(std::uint64_t min_count);

/// Emits the masked dataset for `cfg.masking.mode`. `keyword_list` is
/// required in keyword mode and must be absent in random mode.
EmissionSummary RunMask(const PipelineConfig& cfg,
                        const std::optional<std::filesystem::path>& keyword_list,
                        const std::filesystem::path& out_path);

/// Echoes a frequency curve with a `below_cutoff` column (1 when the count
/// is below `min_count`, i.e. the word is removed as noise).
void WriteAnnotatedCurve(std::ostream& out, const std::vector<FreqCurveRow>& rows,
                         std::uint64_t min_count);

}  // namespace keymask
