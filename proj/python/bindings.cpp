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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

#include "keymask/corpus.hpp"
#include "keymask/embeddings.hpp"
#include "keymask/error.hpp"
#include "keymask/keyword_extract.hpp"
#include "keymask/keyword_filter.hpp"
#include "keymask/masking.hpp"
#include "keymask/parallel.hpp"
#include "keymask/stats.hpp"

namespace py = pybind11;
using namespace keymask;

namespace {

using Counts = std::map<std::string, std::uint64_t>;

KeywordHistogram HistogramFrom(const Counts& counts) {
  KeywordHistogram h;
  h.counts = counts;
  return h;
}

ExtractionParams Params(std::size_t top_k, double diversity, std::size_t min_word_len,
                        const std::optional<std::vector<std::string>>& stopwords) {
  ExtractionParams p;
  p.top_k = top_k;
  p.diversity = diversity;
  p.min_word_len = min_word_len;
  if (stopwords) p.stopwords = std::make_shared<const StopwordSet>(stopwords->begin(), stopwords->end());
  p.Validate();
  return p;
}

MaskingConfig MaskConfig(const std::string& mode, std::optional<double> select_prob, std::uint64_t seed,
                         std::size_t max_len) {
  MaskingConfig cfg = MaskingConfig::Defaults(ParseMaskingMode(mode));
  if (select_prob) cfg.select_prob = *select_prob;
  cfg.seed = seed;
  cfg.max_len = max_len;
  cfg.Validate();
  return cfg;
}

py::dict SummaryDict(const EmissionSummary& s) {
  py::dict d;
  d["documents"] = s.documents;
  d["words_eligible"] = s.words_eligible;
  d["words_selected"] = s.words_selected;
  d["mask"] = s.actions.mask;
  d["random"] = s.actions.random;
  d["keep"] = s.actions.keep;
  d["tokens"] = s.tokens;
  d["labeled_tokens"] = s.labeled_tokens;
  return d;
}

stats::PredictionSet Predictions(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                                 const std::optional<std::vector<std::string>>& ids) {
  stats::PredictionSet ps;
  ps.gold = gold;
  ps.pred = pred;
  if (ids) {
    ps.doc_ids = *ids;
  } else {
    for (std::size_t i = 0; i < gold.size(); ++i) ps.doc_ids.push_back(std::to_string(i));
  }
  ps.Validate();
  return ps;
}

py::dict KappaDict(const stats::KappaResult& r) {
  py::dict d;
  d["kappa"] = r.kappa;
  d["observed_agreement"] = r.observed_agreement;
  d["expected_agreement"] = r.expected_agreement;
  d["band"] = std::string(stats::ToString(r.band));
  d["band_label"] = std::string(stats::DisplayName(r.band));
  d["categories"] = r.categories;
  d["matrix"] = r.matrix;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Keyword extraction, filtering and keyword-aware masking for MLM corpora.";

  // Later registrations are tried first, so the base class goes first.
  auto& base = py::register_exception<Error>(m, "KeymaskError");
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ContractViolation>(m, "ContractViolation", base);
  py::register_exception<ProviderError>(m, "ProviderError", base);

  m.attr("IGNORE_INDEX") = kIgnoreLabel;

  // Corpus and tokenization.
  m.def(
      "segment_words",
      [](const std::string& text) {
        std::vector<std::tuple<std::string, std::size_t, std::size_t>> out;
        for (const auto& w : SegmentWords(text)) out.emplace_back(w.surface, w.start, w.end);
        return out;
      },
      py::arg("text"), "Lowercased word surfaces with [start, end) byte offsets.");

  m.def(
      "load_corpus",
      [](const std::filesystem::path& path, const std::string& format, const std::string& text_field) {
        std::vector<std::pair<std::string, std::string>> out;
        for (auto& d : LoadCorpus(path, ParseCorpusFormat(format), text_field)) {
          out.emplace_back(std::move(d.id), std::move(d.text));
        }
        return out;
      },
      py::arg("path"), py::arg("format") = "jsonl", py::arg("text_field") = "text");

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init([](std::vector<std::string> tokens) { return Vocabulary(std::move(tokens)); }),
           py::arg("tokens"))
      .def_static("load", [](const std::filesystem::path& p) { return Vocabulary::Load(p); }, py::arg("path"))
      .def("find", &Vocabulary::Find, py::arg("token"))
      .def("token", &Vocabulary::Token, py::arg("id"))
      .def("__len__", &Vocabulary::size)
      .def("is_special", &Vocabulary::IsSpecial, py::arg("id"))
      .def_property_readonly("mask_id", &Vocabulary::mask_id)
      .def_property_readonly("unk_id", &Vocabulary::unk_id)
      .def_property_readonly("cls_id", &Vocabulary::cls_id)
      .def_property_readonly("sep_id", &Vocabulary::sep_id)
      .def_property_readonly("pad_id", &Vocabulary::pad_id);

  m.def("tokenize_word", &TokenizeWord, py::arg("word"), py::arg("vocab"));

  m.def(
      "tokenize_document",
      [](const std::string& doc_id, const std::string& text, const Vocabulary& vocab, std::size_t max_len) {
        const auto t = TokenizeDocument({doc_id, text}, vocab, max_len);
        py::dict d;
        d["input_ids"] = t.input_ids;
        py::list words;
        for (std::size_t i = 0; i < t.words.size(); ++i) {
          words.append(py::make_tuple(t.words[i].surface, t.word_offsets[i], t.words[i].token_ids));
        }
        d["words"] = words;
        return d;
      },
      py::arg("doc_id"), py::arg("text"), py::arg("vocab"), py::arg("max_len") = 512);

  // Embeddings.
  py::class_<EmbeddingProvider>(m, "EmbeddingProvider").def_property_readonly("dim", &EmbeddingProvider::dim);

  py::class_<StaticEmbeddings, EmbeddingProvider>(m, "StaticEmbeddings")
      .def(py::init([](std::size_t dim, const std::map<std::string, std::vector<double>>& rows) {
             std::vector<std::pair<std::string, std::vector<double>>> flat(rows.begin(), rows.end());
             return StaticEmbeddings(dim, flat);
           }),
           py::arg("dim"), py::arg("rows"))
      .def_static("load", [](const std::filesystem::path& p) { return StaticEmbeddings::Load(p); }, py::arg("path"))
      .def("__len__", &StaticEmbeddings::coverage_size)
      .def(
          "embed_word",
          [](const StaticEmbeddings& e, const std::string& w) -> std::optional<std::vector<double>> {
            auto v = e.EmbedWord(w);
            if (!v) return std::nullopt;
            return std::vector<double>(v->values().begin(), v->values().end());
          },
          py::arg("word"))
      .def(
          "embed_document",
          [](const StaticEmbeddings& e, const std::vector<std::string>& words) {
            const auto v = e.EmbedDocument("", words);
            return std::vector<double>(v.values().begin(), v.values().end());
          },
          py::arg("words"));

  py::class_<RemoteEmbeddings, EmbeddingProvider>(m, "RemoteEmbeddings")
      .def(py::init([](const std::string& url, int timeout_ms, int max_retries, int max_in_flight,
                       std::size_t batch_size) {
             RemoteOptions o;
             o.timeout = std::chrono::milliseconds(timeout_ms);
             o.max_retries = max_retries;
             o.max_in_flight = max_in_flight;
             o.batch_size = batch_size;
             return std::make_unique<RemoteEmbeddings>(url, o);
           }),
           py::arg("url"), py::arg("timeout_ms") = 30000, py::arg("max_retries") = 3, py::arg("max_in_flight") = 4,
           py::arg("batch_size") = 256);

  m.def(
      "cosine",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return CosineSimilarity(EmbeddingVector(a), EmbeddingVector(b));
      },
      py::arg("a"), py::arg("b"));

  // Keyword extraction.
  m.def(
      "mmr_select",
      [](const std::vector<std::pair<std::string, double>>& scored, const std::vector<std::vector<double>>& vectors,
         std::size_t top_k, double diversity) {
        std::vector<ScoredCandidate> s;
        for (const auto& [surface, sim] : scored) s.push_back({surface, sim});
        std::vector<EmbeddingVector> v;
        for (const auto& x : vectors) v.emplace_back(x);
        return MmrSelect(s, v, Params(top_k, diversity, 1, std::vector<std::string>{}));
      },
      py::arg("scored"), py::arg("vectors"), py::arg("top_k") = 10, py::arg("diversity") = 0.8,
      "Greedy MMR over (surface, doc_similarity) pairs with one vector each.");

  m.def(
      "extract_keywords",
      [](const std::vector<std::string>& texts, const EmbeddingProvider& provider, std::size_t top_k,
         double diversity, std::size_t min_word_len, const std::optional<std::vector<std::string>>& stopwords,
         unsigned threads) {
        std::vector<Document> docs;
        for (std::size_t i = 0; i < texts.size(); ++i) docs.push_back({std::to_string(i), texts[i]});
        const auto p = Params(top_k, diversity, min_word_len, stopwords);
        py::gil_scoped_release release;
        return ExtractKeywords(docs, provider, p, ResolveThreads(threads));
      },
      py::arg("texts"), py::arg("provider"), py::arg("top_k") = 10, py::arg("diversity") = 0.8,
      py::arg("min_word_len") = 2, py::arg("stopwords") = py::none(), py::arg("threads") = 1);

  m.def("default_stopwords", [] {
    const auto sw = DefaultStopwords();
    std::set<std::string> sorted(sw->begin(), sw->end());
    return std::vector<std::string>(sorted.begin(), sorted.end());
  });

  // Filtering.
  m.def(
      "build_histogram",
      [](const std::vector<std::vector<std::string>>& lists) { return BuildHistogram(lists).counts; },
      py::arg("keyword_lists"), "Number of documents whose keyword list contains each word.");
  m.def(
      "apply_min_count",
      [](const Counts& counts, std::uint64_t min_count) {
        return ApplyMinCount(HistogramFrom(counts), min_count).surfaces;
      },
      py::arg("counts"), py::arg("min_count"));
  m.def(
      "knee_candidates",
      [](const Counts& counts) {
        const auto k = KneeCandidates(HistogramFrom(counts));
        py::dict d;
        d["candidates"] = k.candidates;
        d["knee"] = k.knee;
        d["degenerate"] = k.degenerate;
        return d;
      },
      py::arg("counts"));
  m.def(
      "freq_curve",
      [](const Counts& counts, std::size_t last_n) {
        std::vector<std::tuple<std::size_t, std::string, std::uint64_t>> out;
        for (const auto& r : FreqCurve(HistogramFrom(counts), last_n)) out.emplace_back(r.rank, r.surface, r.count);
        return out;
      },
      py::arg("counts"), py::arg("last_n") = 50);

  // Masking.
  m.def(
      "mask_example",
      [](const std::string& doc_id, const std::string& text, const Vocabulary& vocab,
         const std::optional<std::vector<std::string>>& keywords, const std::string& mode,
         std::optional<double> select_prob, std::uint64_t seed, std::size_t max_len) {
        const auto cfg = MaskConfig(mode, select_prob, seed, max_len);
        const auto t = TokenizeDocument({doc_id, text}, vocab, cfg.max_len);
        std::vector<std::size_t> eligible;
        if (cfg.mode == MaskingMode::kKeyword) {
          if (!keywords) throw ConfigError("keyword masking requires keywords");
          KeywordList list;
          for (const auto& k : *keywords) list.surfaces[k] = 1;
          eligible = FindKeywordWords(t, list);
        } else {
          eligible = AllWords(t);
        }
        const auto out = MaskExample(t, eligible, cfg, vocab);
        py::dict d;
        d["input_ids"] = out.example.input_ids;
        d["labels"] = out.example.labels;
        d["words_eligible"] = out.words_eligible;
        d["words_selected"] = out.words_selected;
        return d;
      },
      py::arg("doc_id"), py::arg("text"), py::arg("vocab"), py::arg("keywords") = py::none(),
      py::arg("mode") = "keyword", py::arg("select_prob") = py::none(), py::arg("seed") = 0,
      py::arg("max_len") = 512);

  m.def(
      "emit_dataset",
      [](const std::filesystem::path& corpus, const std::filesystem::path& vocab_path,
         const std::filesystem::path& out_path, const std::optional<std::filesystem::path>& keyword_list,
         const std::string& mode, std::optional<double> select_prob, std::uint64_t seed, std::size_t max_len,
         const std::string& format, const std::string& text_field, unsigned threads) {
        const auto cfg = MaskConfig(mode, select_prob, seed, max_len);
        const auto vocab = Vocabulary::Load(vocab_path);
        std::optional<KeywordList> list;
        if (keyword_list) list = ReadKeywordListTsv(*keyword_list);
        CorpusReader reader(corpus, ParseCorpusFormat(format), text_field);
        EmitOptions opts;
        opts.threads = ResolveThreads(threads);
        opts.vocab_file = vocab_path.filename().string();
        py::gil_scoped_release release;
        return EmitDataset([&reader] { return reader.Next(); }, vocab, list ? &*list : nullptr, cfg, out_path,
                           opts);
      },
      py::arg("corpus"), py::arg("vocab"), py::arg("out"), py::arg("keywords") = py::none(),
      py::arg("mode") = "keyword", py::arg("select_prob") = py::none(), py::arg("seed") = 0,
      py::arg("max_len") = 512, py::arg("format") = "jsonl", py::arg("text_field") = "text",
      py::arg("threads") = 1);

  py::class_<EmissionSummary>(m, "EmissionSummary")
      .def_readonly("documents", &EmissionSummary::documents)
      .def_readonly("words_eligible", &EmissionSummary::words_eligible)
      .def_readonly("words_selected", &EmissionSummary::words_selected)
      .def_readonly("tokens", &EmissionSummary::tokens)
      .def_readonly("labeled_tokens", &EmissionSummary::labeled_tokens)
      .def("as_dict", &SummaryDict);

  // Statistics.
  m.def(
      "accuracy",
      [](const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
        return stats::Accuracy(Predictions(gold, pred, std::nullopt));
      },
      py::arg("gold"), py::arg("pred"));
  m.def(
      "macro_f1",
      [](const std::vector<std::string>& gold, const std::vector<std::string>& pred,
         const std::optional<std::vector<std::string>>& labels) {
        const auto ps = Predictions(gold, pred, std::nullopt);
        return labels ? stats::MacroF1(ps, *labels) : stats::MacroF1(ps);
      },
      py::arg("gold"), py::arg("pred"), py::arg("labels") = py::none());
  m.def(
      "paired_bootstrap",
      [](const std::vector<std::string>& gold, const std::vector<std::string>& pred_a,
         const std::vector<std::string>& pred_b, const std::string& metric, std::size_t n_resamples,
         std::uint64_t seed, unsigned threads) {
        const auto a = Predictions(gold, pred_a, std::nullopt);
        const auto b = Predictions(gold, pred_b, std::nullopt);
        stats::BootstrapResult r;
        {
          py::gil_scoped_release release;
          r = stats::PairedBootstrap(a, b, stats::ParseMetric(metric), n_resamples, seed, ResolveThreads(threads));
        }
        py::dict d;
        d["p_value"] = r.p_value;
        d["observed_delta"] = r.observed_delta;
        d["n_resamples"] = r.n_resamples;
        d["count_not_better"] = r.count_not_better;
        d["significant"] = r.p_value <= stats::kSignificanceLevel;
        return d;
      },
      py::arg("gold"), py::arg("pred_a"), py::arg("pred_b"), py::arg("metric") = "f1",
      py::arg("n_resamples") = 1000, py::arg("seed") = 0, py::arg("threads") = 1,
      "One-sided paired bootstrap that system a beats system b.");
  m.def(
      "cohens_kappa",
      [](const std::vector<std::string>& a, const std::vector<std::string>& b,
         const std::optional<std::vector<std::string>>& categories) {
        return KappaDict(categories ? stats::CohensKappa(a, b, *categories) : stats::CohensKappa(a, b));
      },
      py::arg("rater_a"), py::arg("rater_b"), py::arg("categories") = py::none());
  m.def(
      "kappa_from_matrix",
      [](const std::vector<std::vector<std::uint64_t>>& matrix) { return KappaDict(stats::KappaFromMatrix(matrix)); },
      py::arg("matrix"));
  m.def(
      "agreement_band", [](double kappa) { return std::string(stats::DisplayName(stats::BandFor(kappa))); },
      py::arg("kappa"));
}
