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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace keymask {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI's JSON error lines.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io_error", message) {}
};

/// Malformed input file. `line` is 1-based, 0 when not applicable.
class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& message)
      : Error("format_error", Describe(source, line, message)), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  static std::string Describe(const std::string& source, std::size_t line,
                              const std::string& message) {
    std::string out = source;
    if (line > 0) out += ":" + std::to_string(line);
    if (!out.empty()) out += ": ";
    return out + message;
  }

  std::size_t line_;
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& message)
      : Error("contract_violation", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config_error", message) {}
};

class DegenerateVector : public Error {
 public:
  explicit DegenerateVector(const std::string& message)
      : Error("degenerate_vector", message) {}
};

class UnembeddableDocument : public Error {
 public:
  explicit UnembeddableDocument(const std::string& message)
      : Error("unembeddable_document", message) {}
};

/// Remote embedding service returned a non-2xx status (after retries) or
/// could not be reached.
class ProviderError : public Error {
 public:
  ProviderError(int status, const std::string& message)
      : Error("provider_error", message), status_(status) {}

  /// HTTP status, or 0 for transport failures.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& message) : Error("protocol_error", message) {}
};

}  // namespace keymask
