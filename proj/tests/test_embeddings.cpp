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

#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "keymask/embeddings.hpp"
#include "keymask/error.hpp"
#include "test_support.hpp"

using namespace keymask;
using keymask::testing::ScratchDir;
using keymask::testing::WriteFile;

namespace {

EmbeddingVector Vec(std::vector<double> v) { return EmbeddingVector(std::move(v)); }

// Fake embedding service on an ephemeral port. Word vectors are
// (len(word), 1, 0); documents map to (1, 1, 1).
class FakeService {
 public:
  FakeService() {
    server_.Post("/embed_words", [this](const httplib::Request& req, httplib::Response& res) {
      ++word_calls_;
      if (failures_left_ > 0) {
        --failures_left_;
        res.status = 503;
        res.set_content("try later", "text/plain");
        return;
      }
      auto body = nlohmann::json::parse(req.body);
      nlohmann::json out = {{"dim", dim_.load()}, {"vectors", nlohmann::json::array()}};
      for (const auto& w : body["words"]) {
        std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
        v[0] = static_cast<double>(w.get<std::string>().size());
        if (dim_ > 1) v[1] = 1.0;
        out["vectors"].push_back(v);
      }
      res.set_content(out.dump(), "application/json");
    });
    server_.Post("/embed_document", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = nlohmann::json::parse(req.body);
      last_text_ = body["text"].get<std::string>();
      nlohmann::json out = {{"dim", dim_.load()}, {"vector", std::vector<double>(static_cast<std::size_t>(dim_), 1.0)}};
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  void FailNext(int n) { failures_left_ = n; }
  void SetDim(int d) { dim_ = d; }
  int word_calls() const { return word_calls_; }
  std::string last_text() const { return last_text_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> failures_left_{0};
  std::atomic<int> dim_{3};
  std::atomic<int> word_calls_{0};
  std::string last_text_;
};

RemoteOptions FastRetries(int retries) {
  RemoteOptions o;
  o.max_retries = retries;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::milliseconds(5000);
  return o;
}

}  // namespace

TEST_CASE("cosine similarity") {
  CHECK(CosineSimilarity(Vec({1, 2, 3}), Vec({1, 2, 3})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(CosineSimilarity(Vec({1, 0}), Vec({0, 1})) == 0.0);
  // 32 / (sqrt(14) * sqrt(77))
  CHECK(CosineSimilarity(Vec({1, 2, 3}), Vec({4, 5, 6})) ==
        doctest::Approx(32.0 / (std::sqrt(14.0) * std::sqrt(77.0))).epsilon(1e-12));
  CHECK(CosineSimilarity(Vec({1, 2, 3}), Vec({4, 5, 6})) == doctest::Approx(0.974631846).epsilon(1e-9));
  CHECK_THROWS_AS(CosineSimilarity(Vec({0, 0}), Vec({0, 1})), DegenerateVector);
  CHECK_THROWS_AS(CosineSimilarity(Vec({1, 0}), Vec({0, 1, 0})), ContractViolation);
}

TEST_CASE("cosine similarity is symmetric and scale invariant (property)") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(8), b(8);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng);
    const double lambda = std::exp(g(rng) * 3.0);
    std::vector<double> scaled = a;
    for (auto& x : scaled) x *= lambda;
    const double c = CosineSimilarity(Vec(a), Vec(b));
    CHECK(c == CosineSimilarity(Vec(b), Vec(a)));
    CHECK(std::abs(c - CosineSimilarity(Vec(scaled), Vec(b))) < 1e-9);
    CHECK(c <= 1.0);
    CHECK(c >= -1.0);
  }
}

TEST_CASE("static table loading") {
  ScratchDir dir("emb");
  WriteFile(dir / "v.txt", "dog 1 0 0 0\nCat 0 1 0 0\ncat 9 9 9 9\nfish 0 0 1 0\n");
  const auto table = StaticEmbeddings::Load(dir / "v.txt");
  CHECK(table.dim() == 4);
  CHECK(table.coverage_size() == 3);
  CHECK(*table.EmbedWord("DOG") == Vec({1, 0, 0, 0}));
  CHECK(*table.EmbedWord("cat") == Vec({0, 1, 0, 0}));  // first duplicate wins
  CHECK_FALSE(table.EmbedWord("bird").has_value());

  WriteFile(dir / "w2v.txt", "2 3\na 1 2 3\nb 4 5 6\n");
  CHECK(StaticEmbeddings::Load(dir / "w2v.txt").coverage_size() == 2);

  WriteFile(dir / "bad.txt", "a 1 2 3\nb 1 2\n");
  try {
    StaticEmbeddings::Load(dir / "bad.txt");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line() == 2);
  }
  WriteFile(dir / "empty.txt", "");
  CHECK_THROWS_AS(StaticEmbeddings::Load(dir / "empty.txt"), FormatError);
  WriteFile(dir / "nan.txt", "a 1 nan 3\n");
  CHECK_THROWS_AS(StaticEmbeddings::Load(dir / "nan.txt"), FormatError);
}

TEST_CASE("static document embedding is the mean of covered words") {
  const std::vector<std::pair<std::string, std::vector<double>>> rows = {
      {"dog", {1, 0}}, {"cat", {0, 1}}, {"fish", {3, 3}}, {"tree", {0.1, 0.7}}};
  const StaticEmbeddings table(2, rows);
  const std::vector<std::string> one = {"dog"};
  CHECK(table.EmbedDocument("", one) == *table.EmbedWord("dog"));
  const std::vector<std::string> two = {"dog", "cat"};
  CHECK(table.EmbedDocument("", two) == Vec({0.5, 0.5}));
  // Five words, two uncovered: mean over (1,0), (0,1), (3,3) = (4/3, 4/3).
  const std::vector<std::string> five = {"dog", "zebra", "cat", "ufo", "fish"};
  const auto mean = table.EmbedDocument("", five);
  CHECK(mean[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(mean[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  const std::vector<std::string> none = {"zebra"};
  CHECK_THROWS_AS(table.EmbedDocument("", none), UnembeddableDocument);
  // Repeating one word reproduces its vector exactly, even for inexact floats.
  const std::vector<std::string> repeated(7, "tree");
  CHECK(table.EmbedDocument("", repeated) == *table.EmbedWord("tree"));
}

TEST_CASE("remote client speaks the batch protocol") {
  FakeService service;
  RemoteOptions opts = FastRetries(0);
  opts.batch_size = 2;
  RemoteEmbeddings client(service.url(), opts);
  const std::vector<std::string> words = {"a", "bb", "ccc", "dddd", "eeeee"};
  const auto vectors = client.EmbedWords(words);
  REQUIRE(vectors.size() == 5);
  for (std::size_t i = 0; i < words.size(); ++i) {
    REQUIRE(vectors[i].has_value());
    CHECK((*vectors[i])[0] == static_cast<double>(words[i].size()));
  }
  CHECK(service.word_calls() == 3);
  CHECK(client.dim() == 3);
  const auto doc = client.EmbedDocument("Dogs bark.", words);
  CHECK(doc == Vec({1, 1, 1}));
  CHECK(service.last_text() == "Dogs bark.");
}

TEST_CASE("remote client retries transient failures") {
  FakeService service;
  service.FailNext(2);
  RemoteEmbeddings client(service.url(), FastRetries(3));
  const std::vector<std::string> words = {"abc"};
  CHECK(client.EmbedWords(words).size() == 1);
  CHECK(service.word_calls() == 3);
}

TEST_CASE("remote client gives up with status and body") {
  FakeService service;
  service.FailNext(10);
  RemoteEmbeddings client(service.url(), FastRetries(2));
  const std::vector<std::string> words = {"abc"};
  try {
    client.EmbedWords(words);
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.status() == 503);
    CHECK(std::string(e.what()).find("try later") != std::string::npos);
  }
  CHECK(service.word_calls() == 3);
}

TEST_CASE("remote client rejects a dimension change") {
  FakeService service;
  RemoteEmbeddings client(service.url(), FastRetries(0));
  const std::vector<std::string> words = {"abc"};
  client.EmbedWords(words);
  service.SetDim(5);
  CHECK_THROWS_AS(client.EmbedWords(words), ProtocolError);
}

TEST_CASE("remote client surfaces transport failures") {
  // Nothing listens on port 1.
  RemoteEmbeddings client("http://127.0.0.1:1", FastRetries(1));
  const std::vector<std::string> words = {"abc"};
  try {
    client.EmbedWords(words);
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.status() == 0);
  }
  CHECK_THROWS_AS(RemoteEmbeddings("ftp://x"), ConfigError);
}

TEST_CASE("remote client bounds in-flight requests") {
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  httplib::Server server;
  server.new_task_queue = [] { return new httplib::ThreadPool(16); };
  server.Post("/embed_words", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++active;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --active;
    res.set_content(R"({"dim":1,"vectors":[[1.0]]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  {
    RemoteOptions opts = FastRetries(0);
    opts.max_in_flight = 2;
    RemoteEmbeddings client("http://127.0.0.1:" + std::to_string(port), opts);
    std::vector<std::thread> callers;
    for (int i = 0; i < 8; ++i) {
      callers.emplace_back([&] {
        const std::vector<std::string> w = {"x"};
        client.EmbedWords(w);
      });
    }
    for (auto& c : callers) c.join();
  }
  server.stop();
  t.join();
  CHECK(peak.load() <= 2);
  CHECK(peak.load() >= 1);
}
