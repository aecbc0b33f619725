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

#include <doctest.h>

#include <nlohmann/json.hpp>

#include "keymask/error.hpp"
#include "keymask/masking.hpp"
#include "test_support.hpp"

using namespace keymask;
using keymask::testing::ReadFile;
using keymask::testing::ScratchDir;

namespace {

Vocabulary ToyVocab() {
  return Vocabulary({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "play", "##ing", "##in", "dogs", "##g"});
}

std::string Repeat(const std::string& word, std::size_t n) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) text += ' ';
    text += word;
  }
  return text;
}

MaskingConfig Forced(double mask, double random, double keep) {
  MaskingConfig cfg;
  cfg.select_prob = 1.0;
  cfg.mask_rate = mask;
  cfg.random_rate = random;
  cfg.keep_rate = keep;
  return cfg;
}

// Runs EmitDataset over an in-memory corpus and returns the file contents.
std::pair<std::string, EmissionSummary> Emit(const std::vector<Document>& docs, const Vocabulary& v,
                                             const KeywordList* kw, const MaskingConfig& cfg,
                                             unsigned threads, std::size_t batch) {
  ScratchDir dir("emit");
  std::size_t next = 0;
  DocumentSource src = [&]() -> std::optional<Document> {
    if (next == docs.size()) return std::nullopt;
    return docs[next++];
  };
  EmitOptions opts;
  opts.threads = threads;
  opts.batch_size = batch;
  opts.vocab_file = "vocab.txt";
  const auto summary = EmitDataset(src, v, kw, cfg, dir / "d.jsonl", opts);
  return {ReadFile(dir / "d.jsonl"), summary};
}

}  // namespace

TEST_CASE("no eligible words leaves the example untouched") {
  const auto v = ToyVocab();
  const auto t = TokenizeDocument({"d", "playing dogs"}, v, 512);
  const auto out = MaskExample(t, {}, MaskingConfig{}, v);
  CHECK(out.example.input_ids == t.input_ids);
  CHECK(out.example.labels == std::vector<std::int32_t>(t.input_ids.size(), kIgnoreLabel));
  CHECK(out.words_selected == 0);
}

TEST_CASE("forced mask covers every piece of each eligible word") {
  const auto v = ToyVocab();
  // [CLS] play ##ing dogs play ##ing [SEP]
  const auto t = TokenizeDocument({"d", "playing dogs playing"}, v, 512);
  const std::vector<std::size_t> eligible = {0, 2};
  const auto out = MaskExample(t, eligible, Forced(1, 0, 0), v);
  const int m = v.mask_id();
  CHECK(out.example.input_ids == std::vector<TokenId>{v.cls_id(), m, m, 8, m, m, v.sep_id()});
  CHECK(out.example.labels == std::vector<std::int32_t>{-100, 5, 6, -100, 5, 6, -100});
  CHECK(out.actions.mask == 2);

  const auto kept = MaskExample(t, eligible, Forced(0, 0, 1), v);
  CHECK(kept.example.input_ids == t.input_ids);
  CHECK(kept.example.labels == std::vector<std::int32_t>{-100, 5, 6, -100, 5, 6, -100});

  const auto swapped = MaskExample(t, eligible, Forced(0, 1, 0), v);
  for (std::size_t pos : {1, 2, 4, 5}) CHECK_FALSE(v.IsSpecial(swapped.example.input_ids[pos]));
  CHECK(swapped.example.input_ids[3] == 8);
}

TEST_CASE("eligible indices are deduplicated and range-checked") {
  const auto v = ToyVocab();
  const auto t = TokenizeDocument({"d", "dogs dogs"}, v, 512);
  const std::vector<std::size_t> dup = {1, 1, 0};
  CHECK(MaskExample(t, dup, Forced(1, 0, 0), v).words_eligible == 2);
  const std::vector<std::size_t> bad = {2};
  CHECK_THROWS_AS(MaskExample(t, bad, MaskingConfig{}, v), ContractViolation);
}

TEST_CASE("selection and action rates converge (Monte Carlo)") {
  const auto v = ToyVocab();
  const auto t = TokenizeDocument({"mc", Repeat("playing", 100000)}, v, 300000);
  REQUIRE(t.words.size() == 100000);
  MaskingConfig cfg;
  cfg.seed = 1234;
  const auto out = MaskExample(t, AllWords(t), cfg, v);
  const double selected = static_cast<double>(out.words_selected);
  CHECK(std::abs(selected / 100000.0 - 0.75) <= 0.01);
  CHECK(std::abs(out.actions.mask / selected - 0.8) <= 0.01);
  CHECK(std::abs(out.actions.random / selected - 0.1) <= 0.01);
  CHECK(std::abs(out.actions.keep / selected - 0.1) <= 0.01);
  CHECK(out.actions.total() == out.words_selected);
}

TEST_CASE("labels are confined to eligible words and whole words (property)") {
  const keymask::testing::SyntheticWorld world;
  const auto v = world.MakeVocabulary();
  const auto docs = world.MakeCorpus(200, 60);
  for (const auto& doc : docs) {
    const auto t = TokenizeDocument(doc, v, 128);
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < t.words.size(); i += 3) eligible.push_back(i);
    MaskingConfig cfg;
    cfg.seed = 99;
    const auto out = MaskExample(t, eligible, cfg, v);
    REQUIRE(out.example.labels.size() == t.input_ids.size());
    CHECK(out.example.labels.front() == kIgnoreLabel);
    CHECK(out.example.labels.back() == kIgnoreLabel);
    CHECK(out.example.input_ids.front() == v.cls_id());
    CHECK(out.example.input_ids.back() == v.sep_id());
    std::uint64_t labeled_words = 0;
    for (std::size_t w = 0; w < t.words.size(); ++w) {
      const std::size_t b = t.word_offsets[w];
      const std::size_t e = b + t.words[w].token_ids.size();
      std::size_t labeled = 0;
      for (std::size_t p = b; p < e; ++p) {
        if (out.example.labels[p] != kIgnoreLabel) {
          ++labeled;
          CHECK(out.example.labels[p] == t.input_ids[p]);
        } else {
          CHECK(out.example.input_ids[p] == t.input_ids[p]);
        }
      }
      CHECK((labeled == 0 || labeled == e - b));
      if (labeled) {
        ++labeled_words;
        CHECK(w % 3 == 0);
      }
    }
    CHECK(labeled_words == out.words_selected);
  }
}

TEST_CASE("masking is a pure function of seed and document id") {
  const auto v = ToyVocab();
  const auto t = TokenizeDocument({"same", Repeat("playing dogs", 200)}, v, 10000);
  MaskingConfig cfg;
  cfg.seed = 5;
  const auto a = MaskExample(t, AllWords(t), cfg, v);
  const auto b = MaskExample(t, AllWords(t), cfg, v);
  CHECK(a.example == b.example);
  cfg.seed = 6;
  CHECK_FALSE(MaskExample(t, AllWords(t), cfg, v).example == a.example);
  auto renamed = t;
  renamed.doc_id = "other";
  cfg.seed = 5;
  CHECK_FALSE(MaskExample(renamed, AllWords(renamed), cfg, v).example.labels == a.example.labels);
}

TEST_CASE("emitted datasets are independent of threads and batching") {
  const keymask::testing::SyntheticWorld world;
  const auto v = world.MakeVocabulary();
  const auto docs = world.MakeCorpus(300, 50);
  KeywordList kw;
  for (std::size_t i = 0; i < world.content_words.size(); i += 4) kw.surfaces[world.content_words[i]] = 10;
  const auto cfg = MaskingConfig::Defaults(MaskingMode::kKeyword);
  const auto [one, s1] = Emit(docs, v, &kw, cfg, 1, 4096);
  const auto [four, s4] = Emit(docs, v, &kw, cfg, 4, 7);
  CHECK(one == four);
  CHECK(s1 == s4);
  CHECK(s1.documents == docs.size());
  CHECK(s1.actions.total() == s1.words_selected);

  std::istringstream lines(one);
  std::uint64_t tokens = 0;
  std::uint64_t labeled = 0;
  std::size_t i = 0;
  for (std::string line; std::getline(lines, line); ++i) {
    const auto ex = ParseJsonLine(line);
    CHECK(ex.doc_id == docs[i].id);
    tokens += ex.input_ids.size();
    for (auto l : ex.labels) labeled += (l != kIgnoreLabel);
    CHECK(ToJsonLine(ex) == line);
  }
  CHECK(i == docs.size());
  CHECK(tokens == s1.tokens);
  CHECK(labeled == s1.labeled_tokens);

  CHECK_THROWS_AS(Emit(docs, v, nullptr, cfg, 1, 10), ConfigError);
  CHECK_THROWS_AS(Emit(docs, v, &kw, MaskingConfig::Defaults(MaskingMode::kRandom), 1, 10), ConfigError);
}

TEST_CASE("jsonl lines and the sidecar") {
  const MaskedExample ex{"d\"1", {2, 4, 3}, {-100, 7, -100}};
  const auto line = ToJsonLine(ex);
  CHECK(line == R"({"doc_id":"d\"1","input_ids":[2,4,3],"labels":[-100,7,-100]})");
  CHECK(ParseJsonLine(line) == ex);
  CHECK_THROWS_AS(ParseJsonLine(R"({"doc_id":"x","input_ids":[1],"labels":[]})"), FormatError);
  CHECK_THROWS_AS(ParseJsonLine("nope"), FormatError);

  CHECK(SidecarPath("out/dataset.jsonl") == std::filesystem::path("out/dataset.jsonl.meta.json"));
  auto cfg = MaskingConfig::Defaults(MaskingMode::kKeyword);
  cfg.seed = 42;
  auto j = nlohmann::json::parse(SidecarJson(cfg, "vocab.txt"));
  CHECK(j["mode"] == "keyword");
  CHECK(j["select_prob"] == 0.75);
  CHECK(j["mask_rate"] == 0.8);
  CHECK(j["random_rate"] == 0.1);
  CHECK(j["keep_rate"] == 0.1);
  CHECK(j["seed"] == 42);
  CHECK(j["vocab_file"] == "vocab.txt");
  CHECK(j["scheduler_hint"] == "constant");
  CHECK(j["ignore_index"] == -100);
  j = nlohmann::json::parse(SidecarJson(MaskingConfig::Defaults(MaskingMode::kRandom), "v"));
  CHECK(j["select_prob"] == 0.15);
  CHECK(j["scheduler_hint"] == "linear");
}

TEST_CASE("config validation") {
  MaskingConfig cfg;
  CHECK_NOTHROW(cfg.Validate());
  cfg.mask_rate = 0.7;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = MaskingConfig{};
  cfg.select_prob = 0.0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = MaskingConfig{};
  cfg.max_len = 1;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  CHECK_THROWS_AS(ParseMaskingMode("whole"), ConfigError);
  CHECK(ParseMaskingMode("random") == MaskingMode::kRandom);
}
