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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "stereoscore/errors.h"
#include "stereoscore/ppm.h"
#include "test_util.h"

namespace stereoscore {
namespace {

std::vector<std::uint8_t> Bytes(const std::string& header,
                                std::vector<std::uint8_t> raster = {}) {
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

TEST(PpmTest, TwoByOneDirectByteMap) {
  const RgbImage img = DecodePpm(Bytes("P6\n2 1\n255\n", {255, 0, 0, 0, 0, 255}));
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.height, 1u);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{255, 0, 0, 0, 0, 255}));
  EXPECT_EQ(img.at(1, 0, 2), 255);
}

TEST(PpmTest, CommentsAndWhitespaceInHeader) {
  const RgbImage img =
      DecodePpm(Bytes("P6 # made by hand\n1\t1 # size\n255\n", {1, 2, 3}));
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{1, 2, 3}));
}

// A raster byte equal to '\n' right after maxval must not be eaten.
TEST(PpmTest, SingleWhitespaceAfterMaxval) {
  const RgbImage img = DecodePpm(Bytes("P6\n1 1\n255\n", {'\n', ' ', 9}));
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{'\n', ' ', 9}));
}

TEST(PpmTest, AsciiVariantIsUnsupported) {
  EXPECT_THROW(DecodePpm(Bytes("P3\n1 1\n255\n1 2 3\n")), UnsupportedFormatError);
  EXPECT_THROW(DecodePpm(Bytes("GIF89a")), UnsupportedFormatError);
}

TEST(PpmTest, MaxvalOtherThan255) {
  EXPECT_THROW(DecodePpm(Bytes("P6\n1 1\n65535\n", {0, 0, 0, 0, 0, 0})), MaxvalError);
  EXPECT_THROW(DecodePpm(Bytes("P6\n1 1\n15\n", {0, 0, 0})), MaxvalError);
}

TEST(PpmTest, TruncatedRaster) {
  EXPECT_THROW(DecodePpm(Bytes("P6\n2 2\n255\n", {1, 2, 3})), TruncatedError);
  EXPECT_THROW(DecodePpm(Bytes("P6\n2 2")), TruncatedError);
  EXPECT_THROW(DecodePpm(Bytes("P")), TruncatedError);
}

TEST(PpmTest, MalformedHeader) {
  EXPECT_THROW(DecodePpm(Bytes("P6\nx 2\n255\n")), FormatError);
  EXPECT_THROW(DecodePpm(Bytes("P6\n0 2\n255\n")), FormatError);
}

TEST(PpmTest, EncodeDecodeRoundTrip) {
  std::mt19937_64 rng(1);
  const RgbImage img = testing::RandomImage(37, 23, rng);
  const auto bytes = EncodePpm(img);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 13), "P6\n37 23\n255\n");
  EXPECT_EQ(DecodePpm(bytes), img);
}

TEST(PpmTest, FullHdSize) {
  RgbImage img(1920, 1080);
  const RgbImage back = DecodePpm(EncodePpm(img));
  EXPECT_EQ(back.pixels.size(), 6220800u);
}

TEST(PpmTest, FileErrorsNameThePath) {
  const auto dir = testing::ScratchDir("ppm");
  const auto path = dir / "bad.ppm";
  {
    const auto bytes = Bytes("P6\n4 4\n255\n", {1, 2});
    std::ofstream(path, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }
  try {
    ReadPpm(path);
    FAIL();
  } catch (const TruncatedError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.ppm"), std::string::npos);
  }
  EXPECT_THROW(ReadPpm(dir / "missing.ppm"), IoError);
  std::mt19937_64 rng(2);
  const RgbImage img = testing::RandomImage(5, 4, rng);
  WritePpm(img, dir / "ok.ppm");
  EXPECT_EQ(ReadPpm(dir / "ok.ppm"), img);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace stereoscore
