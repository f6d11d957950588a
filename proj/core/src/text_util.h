// Copyright 2026 The StereoScore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STEREOSCORE_SRC_TEXT_UTIL_H_
#define STEREOSCORE_SRC_TEXT_UTIL_H_

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stereoscore/errors.h"

namespace stereoscore::internal {

// Shortest round-trip rendering; fixed notation for ordinary magnitudes, so
// 100 prints as "100" and 0.0001 as "0.0001".
inline std::string FormatDouble(double value) {
  char buf[400];
  const double mag = std::fabs(value);
  const auto format = (mag == 0.0 || (mag >= 1e-5 && mag < 1e15))
                          ? std::chars_format::fixed
                          : std::chars_format::scientific;
  const auto result = std::to_chars(buf, buf + sizeof(buf), value, format);
  return std::string(buf, result.ptr);
}

inline double ParseDouble(std::string_view text, const std::string& what) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw DataError(what + ": '" + std::string(text) + "' is not a number");
  }
  return value;
}

inline std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

// Splits on '\n', dropping a trailing '\r' and the final empty line.
inline std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

}  // namespace stereoscore::internal

#endif  // STEREOSCORE_SRC_TEXT_UTIL_H_
