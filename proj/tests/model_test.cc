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

#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "stereoscore/errors.h"
#include "stereoscore/harness.h"
#include "stereoscore/model.h"
#include "test_util.h"

namespace stereoscore {
namespace {

using testing::RandomTensor;

Tensor RandomPatches(std::size_t n, std::mt19937_64& rng) {
  return RandomTensor<float>({n, 3, kPatchSize, kPatchSize}, rng, 0, 255, false);
}

std::vector<float> Values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

TEST(ModelTest, ArchitectureIdentities) {
  const MultiScoreNet net = MultiScoreNet::Build(1);
  std::mt19937_64 rng(1);
  const ScoreBatch s = net.Forward(RandomPatches(2, rng), RandomPatches(2, rng));
  for (const Tensor* trunk : {&s.left_trunk, &s.right_trunk, &s.stereo_trunk}) {
    EXPECT_EQ(trunk->shape(), (Shape{2, 128, 4, 4}));
    EXPECT_EQ(trunk->numel() / 2, 2048u);
  }
  EXPECT_EQ(s.head_input.shape(), (Shape{2, 1536}));
  for (const Tensor* q : {&s.left, &s.right, &s.stereo, &s.global}) {
    EXPECT_EQ(q->shape(), (Shape{2, 1}));
    for (float v : q->data()) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(ModelTest, BlockShapeChain) {
  const auto blocks = BranchBlocks(3);
  ASSERT_EQ(blocks.size(), 8u);
  const std::size_t channels[] = {32, 64, 128, 128, 128};
  std::size_t in = 3;
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(blocks[i].in_features, in);
    EXPECT_EQ(blocks[i].out_features, channels[i]);
    in = channels[i];
  }
  EXPECT_EQ(blocks[0].kind, BlockKind::kLBconv);
  EXPECT_EQ(blocks[2].kind, BlockKind::kPlainConv);
  EXPECT_EQ(blocks[4].kind, BlockKind::kLBconv);
  EXPECT_EQ(blocks[5].in_features, 2048u);
  EXPECT_EQ(blocks[6].out_features, 512u);
  EXPECT_EQ(blocks[7].out_features, 1u);
  EXPECT_EQ(BranchBlocks(6)[0].in_features, 6u);
  EXPECT_EQ(GlobalHeadBlocks()[0].in_features, 1536u);

  // Walk the actual ops on a probe to check the spatial halvings.
  const MultiScoreNet net = MultiScoreNet::Build(2);
  Tensor x = Tensor::Full({1, 3, 32, 32}, 100.0f);
  const std::size_t sides[] = {16, 8, 8, 8, 4};
  for (int i = 0; i < 5; ++i) {
    const std::string prefix = "left/" + blocks[i].name.substr(0, blocks[i].name.find('/'));
    x = Relu(Conv2d(x, net.parameter(prefix + "/conv/weight").tensor(),
                    net.parameter(prefix + "/conv/bias").tensor(), 1, 1));
    if (blocks[i].kind == BlockKind::kLBconv) x = MaxPool2d(x);
    EXPECT_EQ(x.shape(), (Shape{1, channels[i], sides[i], sides[i]})) << blocks[i].name;
  }
}

TEST(ModelTest, CanonicalNamesAndCounts) {
  const auto layout = CanonicalLayout(true);
  ASSERT_EQ(layout.size(), 52u);
  EXPECT_EQ(layout[0].name, "left/LBconv1/conv/weight");
  EXPECT_EQ(layout[0].shape, (Shape{32, 3, 3, 3}));
  EXPECT_EQ(layout[32].name, "stereo/LBconv1/conv/weight");
  EXPECT_EQ(layout[32].shape, (Shape{32, 6, 3, 3}));
  EXPECT_EQ(layout[48].name, "global/LBconct/fc/weight");
  EXPECT_EQ(layout[48].shape, (Shape{512, 1536}));
  EXPECT_EQ(CanonicalLayout(false).size(), 48u);
  const MultiScoreNet net = MultiScoreNet::Build(0);
  std::size_t expected = 0;
  for (const auto& spec : layout) expected += NumElements(spec.shape);
  EXPECT_EQ(net.ParameterCount(), expected);
}

TEST(ModelTest, InitializationIsSeededAndBounded) {
  const MultiScoreNet a = MultiScoreNet::Build(5), b = MultiScoreNet::Build(5),
                      c = MultiScoreNet::Build(6);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    const Tensor& ta = a.parameters()[i].tensor();
    EXPECT_EQ(Values(ta), Values(b.parameters()[i].tensor()));
    any_diff |= Values(ta) != Values(c.parameters()[i].tensor());
    const auto& name = a.parameters()[i].name();
    if (name.ends_with("bias")) {
      for (float v : ta.data()) EXPECT_EQ(v, 0.0f);
    } else {
      const double bound = std::sqrt(1.0 / static_cast<double>(ta.numel() / ta.dim(0)));
      for (float v : ta.data()) ASSERT_LE(std::fabs(v), bound) << name;
    }
  }
  EXPECT_TRUE(any_diff);
  // Left and right branches are distinct.
  EXPECT_NE(Values(a.parameter("left/LBconv1/conv/weight").tensor()),
            Values(a.parameter("right/LBconv1/conv/weight").tensor()));
}

TEST(ModelTest, RejectsWrongPatchSize) {
  const MultiScoreNet net = MultiScoreNet::Build(0);
  EXPECT_THROW(net.Forward(Tensor::Zeros({1, 3, 64, 64}), Tensor::Zeros({1, 3, 64, 64})),
               DimensionError);
  EXPECT_THROW(net.Forward(Tensor::Zeros({1, 3, 32, 32}), Tensor::Zeros({2, 3, 32, 32})),
               DimensionError);
  EXPECT_THROW(net.Forward(Tensor::Zeros({1, 1, 32, 32}), Tensor::Zeros({1, 1, 32, 32})),
               DimensionError);
}

TEST(ModelTest, ZeroInputGivesIdenticalRows) {
  MultiScoreNet net = MultiScoreNet::Build(3);
  // Nonzero biases so the bias-propagation value is not trivially zero.
  for (Parameter& p : net.parameters()) {
    if (p.name().ends_with("bias")) {
      for (float& v : p.tensor().mutable_data()) v = 0.05f;
    }
  }
  const ScoreBatch s = net.Forward(Tensor::Zeros({3, 3, 32, 32}), Tensor::Zeros({3, 3, 32, 32}));
  for (std::size_t i = 1; i < 3; ++i) EXPECT_EQ(s.Quad(i), s.Quad(0));
  EXPECT_NE(s.Quad(0).q_global, 0.0);
}

TEST(ModelTest, WeightTyingGivesEqualLeftRightScores) {
  MultiScoreNet net = MultiScoreNet::Build(4);
  for (Parameter& p : net.parameters()) {
    if (!p.name().starts_with("left/")) continue;
    Parameter& r = net.parameter("right/" + p.name().substr(5));
    std::copy(p.tensor().data().begin(), p.tensor().data().end(),
              r.tensor().mutable_data().begin());
  }
  std::mt19937_64 rng(4);
  const Tensor x = RandomPatches(3, rng);
  const ScoreBatch s = net.Forward(x, x);
  EXPECT_EQ(Values(s.left), Values(s.right));
}

// Swap the left/right inputs, the left/right branch parameters, the
// left/right halves of the stereo branch's first kernel, and the matching
// column blocks of LBconct: q_global must not change beyond rounding.
TEST(ModelTest, RelabelingSymmetry) {
  const MultiScoreNet net = MultiScoreNet::Build(8);
  std::vector<Parameter> swapped(net.parameters().begin(), net.parameters().end());
  for (Parameter& p : swapped) {
    std::string name = p.name();
    if (name.starts_with("left/")) name = "right/" + name.substr(5);
    else if (name.starts_with("right/")) name = "left/" + name.substr(6);
    p = Parameter(name, p.tensor());
  }
  MultiScoreNet relabeled = MultiScoreNet::FromParameters(swapped);
  {
    auto w = relabeled.parameter("stereo/LBconv1/conv/weight").tensor().mutable_data();
    const std::size_t per_out = 6 * 9, half = 3 * 9;
    for (std::size_t o = 0; o < 32; ++o) {
      std::swap_ranges(w.begin() + o * per_out, w.begin() + o * per_out + half,
                       w.begin() + o * per_out + half);
    }
    auto h = relabeled.parameter("global/LBconct/fc/weight").tensor().mutable_data();
    for (std::size_t o = 0; o < 512; ++o) {
      std::swap_ranges(h.begin() + o * 1536, h.begin() + o * 1536 + 512,
                       h.begin() + o * 1536 + 512);
    }
  }
  std::mt19937_64 rng(8);
  const Tensor l = RandomPatches(2, rng), r = RandomPatches(2, rng);
  const ScoreBatch a = net.Forward(l, r);
  const ScoreBatch b = relabeled.Forward(r, l);
  // Left/right branches run the same arithmetic; the stereo kernel and the
  // head see their inputs in a different summation order.
  EXPECT_EQ(Values(a.left), Values(b.right));
  EXPECT_EQ(Values(a.right), Values(b.left));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(a.global.data()[i], b.global.data()[i], 1e-4 * std::fabs(a.global.data()[i]) + 1e-6);
    EXPECT_NEAR(a.stereo.data()[i], b.stereo.data()[i], 1e-4 * std::fabs(a.stereo.data()[i]) + 1e-6);
  }
}

TEST(ModelTest, NoGlobalHeadMirrorsStereo) {
  const MultiScoreNet net = MultiScoreNet::Build(9, false);
  EXPECT_FALSE(net.has_global_head());
  EXPECT_THROW(net.parameter("global/score/fc/weight"), StateError);
  std::mt19937_64 rng(9);
  const ScoreBatch s = net.Forward(RandomPatches(2, rng), RandomPatches(2, rng));
  EXPECT_FALSE(s.global.defined());
  EXPECT_EQ(s.Quad(1).q_global, s.Quad(1).q_stereo);
}

// Central differences on one sampled entry of each score head, plus one
// hidden weight per branch, against the analytic gradient of the full loss.
TEST(ModelTest, FourHeadGradientMatchesFiniteDifferences) {
  MultiScoreNet net = MultiScoreNet::Build(11);
  std::mt19937_64 rng(11);
  const Tensor l = RandomPatches(4, rng), r = RandomPatches(4, rng);
  std::vector<PatchLabels> labels = {{80, 30, 30}, {60, 70, 65}, {20, 90, 40}, {55, 55, 55}};
  auto loss_value = [&] {
    NoGradGuard guard;
    return static_cast<double>(
        MultiscoreLoss(net.Forward(l, r), labels, AblationMode::kFull).item());
  };
  net.ZeroGrad();
  Backward(MultiscoreLoss(net.Forward(l, r), labels, AblationMode::kFull));
  for (const char* name : {"left/score/fc/weight", "right/score/fc/weight",
                           "stereo/score/fc/weight", "global/score/fc/weight",
                           "global/LBconct/fc/weight", "left/LBFcr/fc/weight"}) {
    Parameter& p = net.parameter(name);
    auto grad = p.tensor().grad();
    std::size_t idx = 0;
    for (std::size_t i = 1; i < grad.size(); ++i) {
      if (std::fabs(grad[i]) > std::fabs(grad[idx])) idx = i;
    }
    const double analytic = grad[idx];
    auto data = p.tensor().mutable_data();
    const float saved = data[idx];
    const float eps = 1e-2f * std::max(1.0f, std::fabs(saved));
    data[idx] = saved + eps;
    const double plus = loss_value();
    data[idx] = saved - eps;
    const double minus = loss_value();
    data[idx] = saved;
    const double numeric = (plus - minus) / (2.0 * eps);
    EXPECT_LT(std::fabs(analytic - numeric) / std::max(std::fabs(analytic), 1e-6), 1e-2)
        << name << " analytic " << analytic << " numeric " << numeric;
  }
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  const MultiScoreNet net = MultiScoreNet::Build(12);
  const auto bytes = SerializeCheckpoint(net);
  const MultiScoreNet back = DeserializeCheckpoint(bytes);
  ASSERT_EQ(back.parameters().size(), net.parameters().size());
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    const auto a = net.parameters()[i].tensor().data();
    const auto b = back.parameters()[i].tensor().data();
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), a.size_bytes()), 0);
  }
  EXPECT_EQ(SerializeCheckpoint(back), bytes);
  std::mt19937_64 rng(12);
  const Tensor l = RandomPatches(2, rng), r = RandomPatches(2, rng);
  EXPECT_EQ(Values(net.Forward(l, r).global), Values(back.Forward(l, r).global));

  const auto dir = testing::ScratchDir("ckpt");
  SaveCheckpoint(net, dir / "m.msqa");
  EXPECT_EQ(SerializeCheckpoint(LoadCheckpoint(dir / "m.msqa")), bytes);
  std::filesystem::remove_all(dir);
}

TEST(CheckpointTest, HeaderLayout) {
  const auto bytes = SerializeCheckpoint(MultiScoreNet::Build(0, false));
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MSQA");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 48);
  const std::string first = "left/LBconv1/conv/weight";
  EXPECT_EQ(bytes[12], first.size());
  EXPECT_EQ(std::string(bytes.begin() + 16, bytes.begin() + 16 + first.size()), first);
}

class CorruptCheckpointTest : public ::testing::Test {
 protected:
  std::vector<std::uint8_t> bytes_ = SerializeCheckpoint(MultiScoreNet::Build(0));
};

TEST_F(CorruptCheckpointTest, BadMagic) {
  bytes_[0] = 'X';
  EXPECT_THROW(DeserializeCheckpoint(bytes_), MagicError);
}

TEST_F(CorruptCheckpointTest, BadVersion) {
  bytes_[4] = 2;
  EXPECT_THROW(DeserializeCheckpoint(bytes_), VersionError);
}

TEST_F(CorruptCheckpointTest, Truncated) {
  for (std::size_t keep : {std::size_t{2}, std::size_t{10}, std::size_t{30}, bytes_.size() - 1}) {
    std::vector<std::uint8_t> cut(bytes_.begin(), bytes_.begin() + keep);
    EXPECT_THROW(DeserializeCheckpoint(cut), TruncatedError) << keep;
  }
}

TEST_F(CorruptCheckpointTest, TrailingBytes) {
  bytes_.push_back(0);
  EXPECT_THROW(DeserializeCheckpoint(bytes_), FormatError);
}

// A checkpoint whose LBflat weight is stored flat with 2047 elements.
TEST(CheckpointShapeTest, WrongLengthNamesTheTensor) {
  MultiScoreNet net = MultiScoreNet::Build(0);
  std::vector<Parameter> params(net.parameters().begin(), net.parameters().end());
  for (Parameter& p : params) {
    if (p.name() == "left/LBflat/fc/bias") {
      p = Parameter(p.name(), Tensor::Zeros({2047}));
    }
  }
  // Serialize by hand since FromParameters would refuse the shape.
  std::vector<std::uint8_t> out = {'M', 'S', 'Q', 'A', 1, 0, 0, 0};
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  u32(static_cast<std::uint32_t>(params.size()));
  for (const Parameter& p : params) {
    u32(static_cast<std::uint32_t>(p.name().size()));
    out.insert(out.end(), p.name().begin(), p.name().end());
    u32(static_cast<std::uint32_t>(p.tensor().rank()));
    for (std::size_t d : p.tensor().shape()) u32(static_cast<std::uint32_t>(d));
    for (float v : p.tensor().data()) u32(std::bit_cast<std::uint32_t>(v));
  }
  try {
    DeserializeCheckpoint(out);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("left/LBflat/fc/bias"), std::string::npos)
        << e.what();
  }
}

TEST(CheckpointTest, MissingFileIsAnIoError) {
  EXPECT_THROW(LoadCheckpoint("/nonexistent/dir/m.msqa"), IoError);
}

}  // namespace
}  // namespace stereoscore
