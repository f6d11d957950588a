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

#ifndef STEREOSCORE_PPM_H_
#define STEREOSCORE_PPM_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace stereoscore {

// 8-bit RGB image, row-major with interleaved channels exactly as stored in
// a binary PPM.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h)
      : width(w), height(h), pixels(w * h * 3, 0) {}

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels[(y * width + x) * 3 + c];
  }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
    return pixels[(y * width + x) * 3 + c];
  }
  bool operator==(const RgbImage&) const = default;
};

// Binary "P6" with maxval 255 only. Header comments are accepted.
// Errors: UnsupportedFormatError (any other magic), MaxvalError,
// TruncatedError (short pixel data or header), IoError.
RgbImage DecodePpm(std::span<const std::uint8_t> bytes);
RgbImage ReadPpm(const std::filesystem::path& path);

// Writes "P6\n<w> <h>\n255\n" followed by the raw pixels.
std::vector<std::uint8_t> EncodePpm(const RgbImage& image);
void WritePpm(const RgbImage& image, const std::filesystem::path& path);

}  // namespace stereoscore

#endif  // STEREOSCORE_PPM_H_
