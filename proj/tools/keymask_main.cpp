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

// keymask command-line tool: extract -> filter -> mask -> stats -> report.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "keymask/error.hpp"
#include "keymask/parallel.hpp"
#include "keymask/pipeline.hpp"
#include "keymask/stats.hpp"

namespace {

using keymask::ConfigError;
using keymask::PipelineConfig;

void PrintError(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << std::endl;
}

// Flags shared by the pipeline subcommands; unset values fall back to the
// config file, then to built-in defaults.
struct PipelineFlags {
  std::string config;
  std::string corpus;
  std::string format;
  std::string text_field;
  std::string vocab;
  std::string embeddings;
  std::string embedding_url;
  std::string output_dir;
  std::optional<unsigned> threads;

  void AddCorpus(CLI::App* app) {
    app->add_option("--config", config, "Pipeline config JSON");
    app->add_option("--corpus", corpus, "Corpus file");
    app->add_option("--format", format, "Corpus format: jsonl or csv")->check(CLI::IsMember({"jsonl", "csv"}));
    app->add_option("--text-field", text_field, "JSON field / CSV column holding document text");
    app->add_option("--output-dir", output_dir, "Directory for outputs");
    app->add_option("--threads", threads, "Worker threads (default: KEYMASK_THREADS or all cores)");
  }

  PipelineConfig Resolve() const {
    PipelineConfig cfg = config.empty() ? keymask::ParseConfig("{}", std::filesystem::current_path())
                                        : keymask::LoadConfig(config);
    if (!corpus.empty()) cfg.corpus.path = corpus;
    if (!format.empty()) cfg.corpus.format = keymask::ParseCorpusFormat(format);
    if (!text_field.empty()) cfg.corpus.text_field = text_field;
    if (!vocab.empty()) cfg.vocab = vocab;
    if (!embeddings.empty() || !embedding_url.empty()) {
      cfg.embeddings.static_table.reset();
      cfg.embeddings.remote_url.reset();
      if (!embeddings.empty()) cfg.embeddings.static_table = embeddings;
      if (!embedding_url.empty()) cfg.embeddings.remote_url = embedding_url;
    }
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (threads) cfg.threads = *threads;
    return cfg;
  }
};

void RequireCorpus(const PipelineConfig& cfg) {
  if (cfg.corpus.path.empty()) throw ConfigError("no corpus given (use --corpus or the config file)");
}

void WriteOrPrint(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw keymask::IoError("cannot write '" + out_path + "'");
  out << text << '\n';
  if (!out.flush()) throw keymask::IoError("write failure on '" + out_path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyword extraction, filtering and selective masking for in-domain MLM pre-training"};
  app.require_subcommand(1);

  // extract ---------------------------------------------------------------
  PipelineFlags extract_flags;
  std::optional<std::size_t> top_k, min_word_len;
  std::optional<double> diversity;
  std::string stopwords_file, extract_out;
  auto* extract = app.add_subcommand("extract", "Extract up to top_k keywords per document");
  extract_flags.AddCorpus(extract);
  extract->add_option("--embeddings", extract_flags.embeddings, "Static embedding table (word v1 ... vD)");
  extract->add_option("--embedding-url", extract_flags.embedding_url, "Remote embedding service base URL");
  extract->add_option("--top-k", top_k, "Keywords per document (default 10)");
  extract->add_option("--diversity", diversity, "MMR diversity in [0,1] (default 0.8)");
  extract->add_option("--min-word-len", min_word_len, "Minimum candidate length (default 2)");
  extract->add_option("--stopwords", stopwords_file, "Stopword list replacing the built-in English list");
  extract->add_option("--out", extract_out, "Output JSONL (default <output-dir>/keywords.jsonl)");

  // filter ----------------------------------------------------------------
  std::string filter_keywords, filter_out_dir, filter_config;
  std::optional<std::uint64_t> filter_min_count;
  bool filter_auto = false;
  std::size_t last_n = 50;
  auto* filter = app.add_subcommand("filter", "Remove rarely detected keywords");
  filter->add_option("--config", filter_config, "Pipeline config JSON (for output_dir)");
  filter->add_option("--keywords", filter_keywords, "Keywords JSONL from extract");
  auto* min_count_opt = filter->add_option("--min-count", filter_min_count, "Keep words detected in >= N documents");
  auto* auto_opt = filter->add_flag("--auto", filter_auto, "Emit lists for the three knee candidates");
  min_count_opt->excludes(auto_opt);
  filter->add_option("--out-dir", filter_out_dir, "Output directory (default <output-dir>)");
  filter->add_option("--last-n", last_n, "Rows in the frequency-curve CSV (default 50)");

  // mask ------------------------------------------------------------------
  PipelineFlags mask_flags;
  std::string mask_keywords, mask_out;
  bool mask_random = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> select_prob;
  std::optional<std::size_t> max_len;
  auto* mask = app.add_subcommand("mask", "Emit a masked pre-training dataset");
  mask_flags.AddCorpus(mask);
  mask->add_option("--vocab", mask_flags.vocab, "Vocabulary file (one token per line)");
  auto* kw_opt = mask->add_option("--keywords", mask_keywords, "Keyword list TSV (keyword masking)");
  auto* random_opt = mask->add_flag("--random", mask_random, "Random whole-word masking baseline");
  kw_opt->excludes(random_opt);
  mask->add_option("--seed", seed, "Masking seed");
  mask->add_option("--select-prob", select_prob, "Word selection probability");
  mask->add_option("--max-len", max_len, "Maximum sequence length (default 512)");
  mask->add_option("--out", mask_out, "Output JSONL (default <output-dir>/dataset.<mode>.jsonl)");

  // stats -----------------------------------------------------------------
  auto* stats = app.add_subcommand("stats", "Significance and agreement statistics");
  stats->require_subcommand(1);
  std::string boot_a, boot_b, boot_metric = "f1", boot_out;
  std::size_t boot_n = 1000;
  std::uint64_t boot_seed = 0;
  unsigned boot_threads = 0;
  auto* bootstrap = stats->add_subcommand("bootstrap", "Paired bootstrap test: is system A better than B?");
  bootstrap->add_option("--a", boot_a, "Predictions CSV of system A (doc_id,gold,pred)")->required();
  bootstrap->add_option("--b", boot_b, "Predictions CSV of system B (doc_id,gold,pred)")->required();
  bootstrap->add_option("--metric", boot_metric, "f1 or accuracy")->check(CLI::IsMember({"f1", "accuracy"}));
  bootstrap->add_option("--n", boot_n, "Resamples (default 1000)");
  bootstrap->add_option("--seed", boot_seed, "Resampling seed");
  bootstrap->add_option("--threads", boot_threads, "Worker threads");
  bootstrap->add_option("--out", boot_out, "Result JSON (default stdout)");

  std::string kappa_ratings, kappa_categories, kappa_out;
  auto* kappa = stats->add_subcommand("kappa", "Cohen's kappa between two raters");
  kappa->add_option("--ratings", kappa_ratings, "Ratings CSV (item_id,rater_a,rater_b)")->required();
  kappa->add_option("--categories", kappa_categories, "Comma-separated category set (default: observed)");
  kappa->add_option("--out", kappa_out, "Result JSON (default stdout)");

  // report ----------------------------------------------------------------
  std::string report_curve, report_out;
  std::uint64_t report_min_count = 1;
  auto* report = app.add_subcommand("report", "Annotate a frequency curve with its cut-off");
  report->add_option("--curve", report_curve, "freq_curve.csv from filter")->required();
  report->add_option("--min-count", report_min_count, "Cut-off; words below it are marked")->required();
  report->add_option("--out", report_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("usage_error", e.what());
    return 2;
  }

  try {
    if (extract->parsed()) {
      PipelineConfig cfg = extract_flags.Resolve();
      RequireCorpus(cfg);
      if (top_k) cfg.extraction.top_k = *top_k;
      if (diversity) cfg.extraction.diversity = *diversity;
      if (min_word_len) cfg.extraction.min_word_len = *min_word_len;
      if (!stopwords_file.empty()) cfg.extraction.stopwords = keymask::LoadStopwords(stopwords_file);
      cfg.extraction.Validate();
      keymask::ValidateEmbeddingSpec(cfg.embeddings);
      keymask::EnsureWritableDir(cfg.output_dir);
      const std::filesystem::path out =
          extract_out.empty() ? cfg.output_dir / "keywords.jsonl" : std::filesystem::path(extract_out);
      const auto provider = keymask::OpenProvider(cfg.embeddings);
      const auto run = keymask::RunExtract(cfg, *provider, out);
      std::cout << "extracted " << run.keywords << " keywords from " << run.documents << " documents -> "
                << out.string() << '\n';
      std::cout << "keyword extraction time: " << std::fixed << std::setprecision(3) << run.seconds
                << " s\n";
    } else if (filter->parsed()) {
      if (!filter_min_count && !filter_auto) throw ConfigError("filter needs --min-count N or --auto");
      PipelineConfig cfg = filter_config.empty()
                               ? keymask::ParseConfig("{}", std::filesystem::current_path())
                               : keymask::LoadConfig(filter_config);
      const std::filesystem::path keywords =
          filter_keywords.empty() ? cfg.output_dir / "keywords.jsonl" : std::filesystem::path(filter_keywords);
      const std::filesystem::path out_dir =
          filter_out_dir.empty() ? cfg.output_dir : std::filesystem::path(filter_out_dir);
      const auto run = keymask::RunFilter(keywords, filter_min_count, out_dir, last_n);
      nlohmann::ordered_json j;
      j["documents"] = run.histogram.total_documents;
      j["distinct_keywords"] = run.histogram.counts.size();
      j["mode"] = filter_auto ? "auto" : "min_count";
      if (run.knee) {
        j["knee"] = run.knee->knee;
        j["degenerate"] = run.knee->degenerate;
      }
      j["lists"] = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < run.thresholds.size(); ++i) {
        j["lists"].push_back({{"min_count", run.thresholds[i]},
                              {"file", run.list_files[i].string()},
                              {"size", run.list_sizes[i]}});
      }
      j["freq_curve"] = run.curve_file.string();
      std::cout << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    } else if (mask->parsed()) {
      PipelineConfig cfg = mask_flags.Resolve();
      RequireCorpus(cfg);
      if (cfg.vocab.empty()) throw ConfigError("no vocabulary given (use --vocab or the config file)");
      const auto mode = mask_random ? keymask::MaskingMode::kRandom
                        : !mask_keywords.empty() ? keymask::MaskingMode::kKeyword
                                                 : cfg.masking.mode;
      if (mode != cfg.masking.mode) {
        cfg.masking.mode = mode;
        cfg.masking.select_prob = keymask::MaskingConfig::DefaultSelectProb(mode);
      }
      if (seed) cfg.masking.seed = *seed;
      if (select_prob) cfg.masking.select_prob = *select_prob;
      if (max_len) cfg.masking.max_len = *max_len;
      cfg.masking.Validate();
      keymask::EnsureWritableDir(cfg.output_dir);
      std::optional<std::filesystem::path> list;
      if (!mask_keywords.empty()) list = mask_keywords;
      const std::filesystem::path out =
          mask_out.empty() ? cfg.output_dir / ("dataset." + std::string(keymask::ToString(mode)) + ".jsonl")
                           : std::filesystem::path(mask_out);
      const auto summary = keymask::RunMask(cfg, list, out);
      std::cout << keymask::SummaryJson(summary) << '\n';
    } else if (bootstrap->parsed()) {
      const auto a = keymask::stats::ReadPredictionsCsv(boot_a);
      const auto b = keymask::stats::ReadPredictionsCsv(boot_b);
      const auto result = keymask::stats::PairedBootstrap(
          a, b, keymask::stats::ParseMetric(boot_metric), boot_n, boot_seed,
          keymask::ResolveThreads(boot_threads));
      WriteOrPrint(keymask::stats::ToJson(result), boot_out);
    } else if (kappa->parsed()) {
      const auto ratings = keymask::stats::ReadRatingsCsv(kappa_ratings);
      keymask::stats::KappaResult result;
      if (kappa_categories.empty()) {
        result = keymask::stats::CohensKappa(ratings.rater_a, ratings.rater_b);
      } else {
        std::vector<std::string> categories;
        std::stringstream ss(kappa_categories);
        for (std::string c; std::getline(ss, c, ',');) {
          if (!c.empty()) categories.push_back(c);
        }
        result = keymask::stats::CohensKappa(ratings.rater_a, ratings.rater_b, categories);
      }
      WriteOrPrint(keymask::stats::ToJson(result), kappa_out);
    } else if (report->parsed()) {
      const auto rows = keymask::ReadFreqCurveCsv(report_curve);
      std::ostringstream text;
      keymask::WriteAnnotatedCurve(text, rows, report_min_count);
      std::string s = text.str();
      if (!s.empty() && s.back() == '\n') s.pop_back();
      WriteOrPrint(s, report_out);
    }
  } catch (const keymask::Error& e) {
    PrintError(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    PrintError("internal_error", e.what());
    return 1;
  }
  return 0;
}
