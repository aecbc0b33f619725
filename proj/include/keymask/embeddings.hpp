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

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace keymask {

/// Fixed-dimension real vector. All entries finite.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

/// dot(a, b) / (|a| |b|). Throws DegenerateVector on a zero vector and
/// ContractViolation on a dimension mismatch.
double CosineSimilarity(const EmbeddingVector& a, const EmbeddingVector& b);

enum class ProviderKind { kStaticTable, kRemoteService };

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual ProviderKind kind() const noexcept = 0;
  virtual std::size_t dim() const = 0;

  /// One entry per input word; nullopt for words outside the provider's
  /// coverage. Words are expected lowercased.
  virtual std::vector<std::optional<EmbeddingVector>> EmbedWords(
      std::span<const std::string> words) const = 0;

  /// Document-level vector. `text` is the raw document; `words` its
  /// segmented surfaces. Throws UnembeddableDocument when no vector can be
  /// formed.
  virtual EmbeddingVector EmbedDocument(std::string_view text,
                                        std::span<const std::string> words) const = 0;
};

/// In-memory word-vector table loaded from `word v1 ... vD` lines.
/// Immutable after construction and safe to share across threads.
class StaticEmbeddings final : public EmbeddingProvider {
 public:
  static StaticEmbeddings Load(const std::filesystem::path& path);

  /// Builds a table directly; duplicate words keep the first vector.
  StaticEmbeddings(std::size_t dim, std::span<const std::pair<std::string, std::vector<double>>> rows);

  ProviderKind kind() const noexcept override { return ProviderKind::kStaticTable; }
  std::size_t dim() const override { return dim_; }
  std::size_t coverage_size() const noexcept { return index_.size(); }
  bool Covers(std::string_view word) const;

  std::optional<EmbeddingVector> EmbedWord(std::string_view word) const;
  std::vector<std::optional<EmbeddingVector>> EmbedWords(
      std::span<const std::string> words) const override;

  /// Arithmetic mean over the covered words (repeats included).
  EmbeddingVector EmbedDocument(std::string_view text,
                                std::span<const std::string> words) const override;

 private:
  StaticEmbeddings() = default;
  std::optional<std::size_t> Row(std::string_view word) const;

  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct RemoteOptions {
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  /// Cap on concurrently outstanding requests.
  int max_in_flight = 4;
  /// Words per /embed_words request.
  std::size_t batch_size = 256;
};

/// Client for an HTTP embedding service:
///   POST /embed_words     {"words": [...]} -> {"dim": D, "vectors": [[...], ...]}
///   POST /embed_document  {"text": "..."}  -> {"dim": D, "vector": [...]}
/// Non-2xx responses and transport failures are retried with exponential
/// backoff. Every response must report the same dimension.
class RemoteEmbeddings final : public EmbeddingProvider {
 public:
  RemoteEmbeddings(std::string endpoint_url, RemoteOptions options = {});
  ~RemoteEmbeddings() override;

  ProviderKind kind() const noexcept override { return ProviderKind::kRemoteService; }
  /// Known after the first successful response; queries the service with a
  /// probe word otherwise.
  std::size_t dim() const override;

  std::vector<std::optional<EmbeddingVector>> EmbedWords(
      std::span<const std::string> words) const override;
  EmbeddingVector EmbedDocument(std::string_view text,
                                std::span<const std::string> words) const override;

 private:
  struct State;
  std::string Post(const std::string& path, const std::string& body) const;
  void CheckDim(std::size_t dim) const;

  std::string scheme_host_port_;
  std::string base_path_;
  RemoteOptions options_;
  std::unique_ptr<State> state_;
};

}  // namespace keymask
