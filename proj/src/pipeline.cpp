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

#include "keymask/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "keymask/error.hpp"
#include "keymask/parallel.hpp"

namespace keymask {
namespace {

using nlohmann::json;

void RejectUnknownKeys(const json& obj, std::initializer_list<std::string_view> allowed,
                       const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

const json* Child(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

template <typename T>
T Get(const json& obj, const char* key, T fallback, const std::string& where) {
  const json* v = Child(obj, key);
  if (!v) return fallback;
  try {
    return v->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for '" + std::string(key) + "' in " + where);
  }
}

const json& Section(const json& root, const char* key) {
  static const json empty = json::object();
  const json* v = Child(root, key);
  if (!v) return empty;
  if (!v->is_object()) throw ConfigError("'" + std::string(key) + "' must be an object");
  return *v;
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() ? base / path : path;
}

template <typename Json>
std::string DumpLine(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

}  // namespace

PipelineConfig ParseConfig(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  RejectUnknownKeys(root, {"corpus", "vocab", "embeddings", "extraction", "masking", "output_dir", "threads"},
                    "config");
  PipelineConfig cfg;

  const json& corpus = Section(root, "corpus");
  RejectUnknownKeys(corpus, {"path", "format", "text_field"}, "corpus");
  if (auto p = Get<std::string>(corpus, "path", "", "corpus"); !p.empty()) {
    cfg.corpus.path = Resolve(base_dir, p);
  }
  cfg.corpus.format = ParseCorpusFormat(Get<std::string>(corpus, "format", "jsonl", "corpus"));
  cfg.corpus.text_field = Get<std::string>(corpus, "text_field", "text", "corpus");

  if (auto v = Get<std::string>(root, "vocab", "", "config"); !v.empty()) cfg.vocab = Resolve(base_dir, v);

  const json& emb = Section(root, "embeddings");
  RejectUnknownKeys(emb, {"static_table", "remote_url", "timeout_ms", "max_retries", "max_in_flight", "batch_size"},
                    "embeddings");
  if (Child(emb, "static_table")) {
    cfg.embeddings.static_table = Resolve(base_dir, Get<std::string>(emb, "static_table", "", "embeddings"));
  }
  if (Child(emb, "remote_url")) {
    cfg.embeddings.remote_url = Get<std::string>(emb, "remote_url", "", "embeddings");
  }
  auto& ro = cfg.embeddings.remote;
  ro.timeout = std::chrono::milliseconds(Get<std::int64_t>(emb, "timeout_ms", ro.timeout.count(), "embeddings"));
  ro.max_retries = Get<int>(emb, "max_retries", ro.max_retries, "embeddings");
  ro.max_in_flight = Get<int>(emb, "max_in_flight", ro.max_in_flight, "embeddings");
  ro.batch_size = Get<std::size_t>(emb, "batch_size", ro.batch_size, "embeddings");

  const json& ex = Section(root, "extraction");
  RejectUnknownKeys(ex, {"top_k", "diversity", "min_word_len", "stopwords"}, "extraction");
  cfg.extraction.top_k = Get<std::size_t>(ex, "top_k", cfg.extraction.top_k, "extraction");
  cfg.extraction.diversity = Get<double>(ex, "diversity", cfg.extraction.diversity, "extraction");
  cfg.extraction.min_word_len = Get<std::size_t>(ex, "min_word_len", cfg.extraction.min_word_len, "extraction");
  if (Child(ex, "stopwords")) {
    cfg.stopwords = Resolve(base_dir, Get<std::string>(ex, "stopwords", "", "extraction"));
    cfg.extraction.stopwords = LoadStopwords(*cfg.stopwords);
  }

  const json& mk = Section(root, "masking");
  RejectUnknownKeys(mk, {"mode", "select_prob", "mask_rate", "random_rate", "keep_rate", "seed", "max_len"},
                    "masking");
  const MaskingMode mode = ParseMaskingMode(Get<std::string>(mk, "mode", "keyword", "masking"));
  cfg.masking = MaskingConfig::Defaults(mode);
  cfg.masking.select_prob = Get<double>(mk, "select_prob", cfg.masking.select_prob, "masking");
  cfg.masking.mask_rate = Get<double>(mk, "mask_rate", cfg.masking.mask_rate, "masking");
  cfg.masking.random_rate = Get<double>(mk, "random_rate", cfg.masking.random_rate, "masking");
  cfg.masking.keep_rate = Get<double>(mk, "keep_rate", cfg.masking.keep_rate, "masking");
  cfg.masking.seed = Get<std::uint64_t>(mk, "seed", cfg.masking.seed, "masking");
  cfg.masking.max_len = Get<std::size_t>(mk, "max_len", cfg.masking.max_len, "masking");

  cfg.output_dir = Resolve(base_dir, Get<std::string>(root, "output_dir", "out", "config"));
  cfg.threads = Get<unsigned>(root, "threads", 0u, "config");

  cfg.extraction.Validate();
  cfg.masking.Validate();
  return cfg;
}

PipelineConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str(), path.parent_path());
}

void ValidateEmbeddingSpec(const EmbeddingSpec& spec) {
  if (spec.static_table.has_value() == spec.remote_url.has_value()) {
    throw ConfigError("configure exactly one embedding backend (static_table or remote_url)");
  }
}

void EnsureWritableDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
  const auto probe = dir / ".keymask-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw IoError("output directory '" + dir.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

std::unique_ptr<EmbeddingProvider> OpenProvider(const EmbeddingSpec& spec) {
  ValidateEmbeddingSpec(spec);
  if (spec.static_table) {
    return std::make_unique<StaticEmbeddings>(StaticEmbeddings::Load(*spec.static_table));
  }
  return std::make_unique<RemoteEmbeddings>(*spec.remote_url, spec.remote);
}

std::string KeywordsJsonLine(const DocumentKeywords& entry) {
  nlohmann::ordered_json j;
  j["doc_id"] = entry.doc_id;
  j["keywords"] = entry.keywords;
  return DumpLine(j);
}

std::vector<DocumentKeywords> ReadKeywordsJsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open keywords file '" + path.string() + "'");
  std::vector<DocumentKeywords> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(path.string(), line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("doc_id") || !j["doc_id"].is_string() ||
        !j.contains("keywords") || !j["keywords"].is_array()) {
      throw FormatError(path.string(), line_no, "expected {\"doc_id\": str, \"keywords\": [str]}");
    }
    DocumentKeywords entry;
    entry.doc_id = j["doc_id"].get<std::string>();
    for (const auto& k : j["keywords"]) {
      if (!k.is_string()) throw FormatError(path.string(), line_no, "keywords must be strings");
      entry.keywords.push_back(k.get<std::string>());
    }
    out.push_back(std::move(entry));
  }
  return out;
}

ExtractRun RunExtract(const PipelineConfig& cfg, const EmbeddingProvider& provider,
                      const std::filesystem::path& out_path) {
  cfg.extraction.Validate();
  const auto started = std::chrono::steady_clock::now();
  const unsigned threads = ResolveThreads(cfg.threads);
  CorpusReader reader(cfg.corpus.path, cfg.corpus.format, cfg.corpus.text_field);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write keywords file '" + out_path.string() + "'");

  ExtractRun run;
  constexpr std::size_t kBatch = 1024;
  std::vector<Document> batch;
  for (;;) {
    batch.clear();
    while (batch.size() < kBatch) {
      auto doc = reader.Next();
      if (!doc) break;
      batch.push_back(std::move(*doc));
    }
    if (batch.empty()) break;
    const auto keywords = ExtractKeywords(batch, provider, cfg.extraction, threads);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out << KeywordsJsonLine({batch[i].id, keywords[i]}) << '\n';
      run.keywords += keywords[i].size();
    }
    run.documents += batch.size();
  }
  if (!out.flush()) throw IoError("write failure on '" + out_path.string() + "'");
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

std::filesystem::path KeywordListFileName(std::uint64_t min_count) {
  return "keywords.min" + std::to_string(min_count) + ".tsv";
}

FilterRun RunFilter(const std::filesystem::path& keywords_file,
                    std::optional<std::uint64_t> min_count, const std::filesystem::path& out_dir,
                    std::size_t last_n) {
  if (min_count && *min_count < 1) throw ConfigError("--min-count must be at least 1");
  EnsureWritableDir(out_dir);
  FilterRun run;
  for (const auto& entry : ReadKeywordsJsonl(keywords_file)) run.histogram.AddDocument(entry.keywords);

  if (min_count) {
    run.thresholds = {*min_count};
  } else if (run.histogram.counts.empty()) {
    // Nothing was detected; a single pass-through threshold keeps outputs well-formed.
    run.thresholds = {1};
  } else {
    run.knee = KneeCandidates(run.histogram);
    run.thresholds = run.knee->candidates;
  }
  for (std::uint64_t t : run.thresholds) {
    const KeywordList list = ApplyMinCount(run.histogram, t);
    const auto file = out_dir / KeywordListFileName(t);
    WriteKeywordListTsv(file, list);
    run.list_files.push_back(file);
    run.list_sizes.push_back(list.size());
  }
  run.curve_file = out_dir / "freq_curve.csv";
  std::ofstream curve(run.curve_file, std::ios::binary | std::ios::trunc);
  if (!curve) throw IoError("cannot write '" + run.curve_file.string() + "'");
  WriteFreqCurveCsv(curve, FreqCurve(run.histogram, last_n));
  if (!curve.flush()) throw IoError("write failure on '" + run.curve_file.string() + "'");
  return run;
}

EmissionSummary RunMask(const PipelineConfig& cfg,
                        const std::optional<std::filesystem::path>& keyword_list,
                        const std::filesystem::path& out_path) {
  cfg.masking.Validate();
  const Vocabulary vocab = Vocabulary::Load(cfg.vocab);
  std::optional<KeywordList> keywords;
  if (cfg.masking.mode == MaskingMode::kKeyword) {
    if (!keyword_list) throw ConfigError("keyword masking requires --keywords");
    keywords = ReadKeywordListTsv(*keyword_list);
  } else if (keyword_list) {
    throw ConfigError("random masking does not take a keyword list");
  }
  CorpusReader reader(cfg.corpus.path, cfg.corpus.format, cfg.corpus.text_field);
  EmitOptions options;
  options.threads = ResolveThreads(cfg.threads);
  options.vocab_file = cfg.vocab.filename().string();
  return EmitDataset([&reader] { return reader.Next(); }, vocab, keywords ? &*keywords : nullptr,
                     cfg.masking, out_path, options);
}

void WriteAnnotatedCurve(std::ostream& out, const std::vector<FreqCurveRow>& rows,
                         std::uint64_t min_count) {
  out << "rank,surface,count,below_cutoff\n";
  for (const auto& r : rows) {
    out << r.rank << ',' << CsvEscape(r.surface) << ',' << r.count << ','
        << (r.count < min_count ? 1 : 0) << '\n';
  }
}

}  // namespace keymask
