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

#include "keymask/embeddings.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "keymask/corpus.hpp"
#include "keymask/error.hpp"

namespace keymask {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw ContractViolation("embedding vector has a non-finite entry");
  }
}

double CosineSimilarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw ContractViolation("cosine similarity of vectors with dims " + std::to_string(a.dim()) +
                            " and " + std::to_string(b.dim()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DegenerateVector("cosine similarity of a zero vector");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Static table

namespace {

std::vector<std::string_view> SplitSpaces(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) parts.push_back(line.substr(i, j - i));
    i = j;
  }
  return parts;
}

bool ParseDouble(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool IsUnsignedInteger(std::string_view s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string_view::npos;
}

}  // namespace

StaticEmbeddings StaticEmbeddings::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding table '" + path.string() + "'");
  const std::string source = path.string();
  StaticEmbeddings table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto parts = SplitSpaces(line);
    if (parts.empty()) continue;
    // word2vec text files start with a "<count> <dim>" header.
    if (line_no == 1 && parts.size() == 2 && IsUnsignedInteger(parts[0]) &&
        IsUnsignedInteger(parts[1])) {
      continue;
    }
    const std::size_t dim = parts.size() - 1;
    if (dim == 0) throw FormatError(source, line_no, "word without vector components");
    if (table.dim_ == 0) {
      table.dim_ = dim;
    } else if (dim != table.dim_) {
      throw FormatError(source, line_no,
                        "expected " + std::to_string(table.dim_) + " components, found " +
                            std::to_string(dim));
    }
    std::string word = ToLower(parts[0]);
    if (table.index_.contains(word)) continue;
    const std::size_t row = table.index_.size();
    for (std::size_t k = 1; k < parts.size(); ++k) {
      double v;
      if (!ParseDouble(parts[k], v) || !std::isfinite(v)) {
        throw FormatError(source, line_no, "invalid component '" + std::string(parts[k]) + "'");
      }
      table.data_.push_back(static_cast<float>(v));
    }
    table.index_.emplace(std::move(word), row);
  }
  if (table.index_.empty()) throw FormatError(source, 0, "embedding table is empty");
  return table;
}

StaticEmbeddings::StaticEmbeddings(
    std::size_t dim, std::span<const std::pair<std::string, std::vector<double>>> rows)
    : dim_(dim) {
  if (dim == 0) throw ContractViolation("embedding dimension must be positive");
  for (const auto& [word, values] : rows) {
    if (values.size() != dim) throw ContractViolation("row for '" + word + "' has wrong dimension");
    std::string key = ToLower(word);
    if (index_.contains(key)) continue;
    index_.emplace(std::move(key), index_.size());
    for (double v : values) {
      if (!std::isfinite(v)) throw ContractViolation("non-finite component for '" + word + "'");
      data_.push_back(static_cast<float>(v));
    }
  }
}

std::optional<std::size_t> StaticEmbeddings::Row(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) {
    std::string lowered = ToLower(word);
    if (lowered == word) return std::nullopt;
    it = index_.find(lowered);
    if (it == index_.end()) return std::nullopt;
  }
  return it->second;
}

bool StaticEmbeddings::Covers(std::string_view word) const { return Row(word).has_value(); }

std::optional<EmbeddingVector> StaticEmbeddings::EmbedWord(std::string_view word) const {
  auto row = Row(word);
  if (!row) return std::nullopt;
  const float* p = data_.data() + *row * dim_;
  return EmbeddingVector(std::vector<double>(p, p + dim_));
}

std::vector<std::optional<EmbeddingVector>> StaticEmbeddings::EmbedWords(
    std::span<const std::string> words) const {
  std::vector<std::optional<EmbeddingVector>> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(EmbedWord(w));
  return out;
}

EmbeddingVector StaticEmbeddings::EmbedDocument(std::string_view /*text*/,
                                                std::span<const std::string> words) const {
  std::vector<double> sum(dim_, 0.0);
  std::size_t covered = 0;
  for (const auto& w : words) {
    auto row = Row(w);
    if (!row) continue;
    const float* p = data_.data() + *row * dim_;
    for (std::size_t k = 0; k < dim_; ++k) sum[k] += static_cast<double>(p[k]);
    ++covered;
  }
  if (covered == 0) throw UnembeddableDocument("no document word is covered by the embedding table");
  for (double& v : sum) v /= static_cast<double>(covered);
  return EmbeddingVector(std::move(sum));
}

// ---------------------------------------------------------------------------
// Remote service

struct RemoteEmbeddings::State {
  explicit State(int slots) : in_flight(slots) {}
  std::counting_semaphore<> in_flight;
  std::atomic<std::size_t> dim{0};
};

RemoteEmbeddings::RemoteEmbeddings(std::string endpoint_url, RemoteOptions options)
    : options_(options) {
  if (options_.max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
  if (options_.max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (options_.batch_size == 0) throw ConfigError("batch_size must be positive");
  const std::string http = "http://";
  if (endpoint_url.rfind(http, 0) != 0) {
    throw ConfigError("embedding endpoint must be an http:// URL: '" + endpoint_url + "'");
  }
  const std::size_t slash = endpoint_url.find('/', http.size());
  scheme_host_port_ = endpoint_url.substr(0, slash);
  base_path_ = slash == std::string::npos ? "" : endpoint_url.substr(slash);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  state_ = std::make_unique<State>(options_.max_in_flight);
}

RemoteEmbeddings::~RemoteEmbeddings() = default;

std::string RemoteEmbeddings::Post(const std::string& path, const std::string& body) const {
  const std::string target = base_path_ + path;
  auto backoff = options_.initial_backoff;
  int last_status = 0;
  std::string last_detail;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Result res{nullptr, httplib::Error::Unknown};
    {
      state_->in_flight.acquire();
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{state_->in_flight};
      httplib::Client client(scheme_host_port_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
      const auto usecs =
          std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());
      res = client.Post(target, body, "application/json");
    }
    if (!res) {
      last_status = 0;
      last_detail = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_status = res->status;
    last_detail = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
  }
  throw ProviderError(last_status, "embedding service " + scheme_host_port_ + target + " failed after " +
                                       std::to_string(options_.max_retries + 1) +
                                       " attempts; " + last_detail);
}

void RemoteEmbeddings::CheckDim(std::size_t dim) const {
  if (dim == 0) throw ProtocolError("embedding service reported dim 0");
  std::size_t expected = 0;
  if (!state_->dim.compare_exchange_strong(expected, dim) && expected != dim) {
    throw ProtocolError("embedding service changed dimension from " + std::to_string(expected) +
                        " to " + std::to_string(dim));
  }
}

namespace {

std::vector<double> ReadVector(const nlohmann::json& j, std::size_t dim) {
  if (!j.is_array()) throw ProtocolError("vector is not a JSON array");
  if (j.size() != dim) {
    throw ProtocolError("vector has " + std::to_string(j.size()) + " components, dim is " +
                        std::to_string(dim));
  }
  std::vector<double> out;
  out.reserve(dim);
  for (const auto& v : j) {
    if (!v.is_number()) throw ProtocolError("vector component is not a number");
    out.push_back(v.get<double>());
  }
  return out;
}

nlohmann::json ParseResponse(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON response: ") + e.what());
  }
}

std::size_t ReadDim(const nlohmann::json& j) {
  auto it = j.find("dim");
  if (it == j.end() || !it->is_number_unsigned()) throw ProtocolError("response lacks integer 'dim'");
  return it->get<std::size_t>();
}

}  // namespace

std::size_t RemoteEmbeddings::dim() const {
  if (std::size_t d = state_->dim.load(); d != 0) return d;
  const std::string probe[] = {"the"};
  EmbedWords(probe);
  return state_->dim.load();
}

std::vector<std::optional<EmbeddingVector>> RemoteEmbeddings::EmbedWords(
    std::span<const std::string> words) const {
  std::vector<std::optional<EmbeddingVector>> out;
  out.reserve(words.size());
  for (std::size_t begin = 0; begin < words.size(); begin += options_.batch_size) {
    const auto batch = words.subspan(begin, std::min(options_.batch_size, words.size() - begin));
    nlohmann::json req = {{"words", nlohmann::json::array()}};
    for (const auto& w : batch) req["words"].push_back(w);
    const nlohmann::json res = ParseResponse(Post("/embed_words", req.dump()));
    const std::size_t d = ReadDim(res);
    CheckDim(d);
    auto vectors = res.find("vectors");
    if (vectors == res.end() || !vectors->is_array() || vectors->size() != batch.size()) {
      throw ProtocolError("response 'vectors' must align with the " + std::to_string(batch.size()) +
                          " requested words");
    }
    for (const auto& v : *vectors) out.emplace_back(EmbeddingVector(ReadVector(v, d)));
  }
  return out;
}

EmbeddingVector RemoteEmbeddings::EmbedDocument(std::string_view text,
                                                std::span<const std::string> /*words*/) const {
  nlohmann::json req = {{"text", std::string(text)}};
  const nlohmann::json res = ParseResponse(Post("/embed_document", req.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)));
  const std::size_t d = ReadDim(res);
  CheckDim(d);
  auto vector = res.find("vector");
  if (vector == res.end()) throw ProtocolError("response lacks 'vector'");
  return EmbeddingVector(ReadVector(*vector, d));
}

}  // namespace keymask
