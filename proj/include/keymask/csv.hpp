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
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace keymask {

/// Minimal RFC 4180 reader: comma separated, double-quote escaping, quoted
/// fields may span lines. Both LF and CRLF line endings are accepted.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source_name)
      : in_(in), source_(std::move(source_name)) {}

  /// Next record, or nullopt at end of input. Throws FormatError on an
  /// unterminated quote.
  std::optional<std::vector<std::string>> Next();

  /// 1-based physical line on which the most recently returned record began.
  std::size_t record_line() const noexcept { return record_line_; }
  const std::string& source() const noexcept { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

/// Reads a header row and returns the column index of `name`, or nullopt.
std::optional<std::size_t> FindColumn(const std::vector<std::string>& header,
                                      const std::string& name);

/// Quotes a field if it contains a comma, quote, or newline.
std::string CsvEscape(const std::string& field);

}  // namespace keymask
