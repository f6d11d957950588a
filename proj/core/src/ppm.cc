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

#include "stereoscore/ppm.h"

#include <cctype>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "stereoscore/errors.h"

namespace stereoscore {
namespace {

class HeaderParser {
 public:
  explicit HeaderParser(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal field.
  std::size_t Field(const char* what) {
    SkipSeparators();
    if (pos_ >= bytes_.size()) {
      throw TruncatedError(std::string("PPM header ends before ") + what);
    }
    if (!std::isdigit(bytes_[pos_])) {
      throw FormatError(std::string("PPM header: expected ") + what);
    }
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      if (value > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError(std::string("PPM header: ") + what + " too large");
      }
      value = value * 10 + (bytes_[pos_++] - '0');
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void EndOfHeader() {
    if (pos_ >= bytes_.size()) throw TruncatedError("PPM header ends before raster");
    if (!std::isspace(bytes_[pos_])) throw FormatError("PPM header: bad maxval terminator");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  void SkipSeparators() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

RgbImage DecodePpm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) throw TruncatedError("PPM shorter than its magic");
  if (bytes[0] != 'P' || bytes[1] != '6') {
    throw UnsupportedFormatError("unsupported image format (magic '" +
                                 std::string(bytes.begin(), bytes.begin() + 2) +
                                 "'); only binary P6 PPM is supported");
  }
  HeaderParser header(bytes);
  const std::size_t width = header.Field("width");
  const std::size_t height = header.Field("height");
  const std::size_t maxval = header.Field("maxval");
  if (maxval != 255) {
    throw MaxvalError("PPM maxval " + std::to_string(maxval) +
                      " unsupported (expected 255)");
  }
  if (width == 0 || height == 0) throw FormatError("PPM has zero width or height");
  header.EndOfHeader();
  const std::size_t need = width * height * 3;
  const std::size_t have = bytes.size() - header.pos();
  if (have < need) {
    throw TruncatedError("PPM pixel data truncated: " + std::to_string(have) +
                         " of " + std::to_string(need) + " bytes");
  }
  RgbImage image;
  image.width = width;
  image.height = height;
  image.pixels.assign(bytes.begin() + header.pos(),
                      bytes.begin() + header.pos() + need);
  return image;
}

RgbImage ReadPpm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return DecodePpm(bytes);
  } catch (const UnsupportedFormatError& e) {
    throw UnsupportedFormatError(path.string() + ": " + e.what());
  } catch (const MaxvalError& e) {
    throw MaxvalError(path.string() + ": " + e.what());
  } catch (const TruncatedError& e) {
    throw TruncatedError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> EncodePpm(const RgbImage& image) {
  if (image.pixels.size() != image.width * image.height * 3) {
    throw DataError("image buffer does not match its dimensions");
  }
  const std::string header = "P6\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.pixels.begin(), image.pixels.end());
  return bytes;
}

void WritePpm(const RgbImage& image, const std::filesystem::path& path) {
  const auto bytes = EncodePpm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace stereoscore
