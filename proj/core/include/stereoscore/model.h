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

#ifndef STEREOSCORE_MODEL_H_
#define STEREOSCORE_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stereoscore/optim.h"
#include "stereoscore/tensor.h"

namespace stereoscore {

inline constexpr std::size_t kPatchSize = 32;
inline constexpr std::size_t kTrunkChannels = 128;
inline constexpr std::size_t kTrunkSide = 4;
inline constexpr std::size_t kTrunkFeatures =
    kTrunkChannels * kTrunkSide * kTrunkSide;  // 2048
inline constexpr std::size_t kBranchFeatures = 512;
inline constexpr std::size_t kHeadInputFeatures = 3 * kBranchFeatures;  // 1536

enum class BlockKind { kLBconv, kPlainConv, kLBflat, kLBFcr, kScore, kLBconct };

// One parameterized layer. Conv blocks are 3x3, pad 1, followed by ReLU;
// LBconv adds 2x2 max pooling. FC blocks other than kScore apply ReLU.
struct BlockSpec {
  BlockKind kind;
  std::string name;  // e.g. "LBconv1/conv"
  std::size_t in_features;
  std::size_t out_features;
};

// Blocks of one branch in execution order: LBconv1, LBconv2, PlainConv1,
// PlainConv2, LBconv3, LBflat, LBFcr, score.
std::vector<BlockSpec> BranchBlocks(std::size_t in_channels);
// LBconct followed by the global score layer.
std::vector<BlockSpec> GlobalHeadBlocks();

struct ParameterSpec {
  std::string name;
  Shape shape;
};

// Names and shapes of every parameter, in canonical order. Networks without
// the global head omit the "global/" entries.
std::vector<ParameterSpec> CanonicalLayout(bool with_global_head = true);

// Per-sample (or per-image, after aggregation) scores in MOS units.
// Networks built without the global head report q_stereo in q_global.
struct ScoreQuad {
  double q_left = 0.0;
  double q_right = 0.0;
  double q_stereo = 0.0;
  double q_global = 0.0;

  bool operator==(const ScoreQuad&) const = default;
};

// Output of a forward pass over a batch of N co-located patch pairs.
struct ScoreBatch {
  Tensor left;    // [N,1]
  Tensor right;   // [N,1]
  Tensor stereo;  // [N,1]
  Tensor global;  // [N,1]; undefined when the network has no global head.

  // Intermediate features, exposed for shape probes and tests.
  Tensor left_trunk, right_trunk, stereo_trunk;  // [N,128,4,4]
  Tensor head_input;                             // [N,1536]

  std::size_t size() const { return left.dim(0); }
  // Row i as doubles; q_global mirrors q_stereo when `global` is undefined.
  ScoreQuad Quad(std::size_t i) const;
};

// Three-branch multi-score network: distinct left and right branches, a
// stereo branch fed the 6-channel concatenation of both views, and a global
// head over the concatenated 512-d outputs of the three branches.
//
// Copying deep-copies every parameter.
class MultiScoreNet {
 public:
  // Fan-in scaled uniform weights (bound sqrt(1/fan_in)), zero biases,
  // drawn in canonical order from a generator seeded with `seed`.
  static MultiScoreNet Build(std::uint64_t seed, bool with_global_head = true);

  // Wraps explicit parameters; names and shapes must match the canonical
  // layout exactly (ShapeError otherwise).
  static MultiScoreNet FromParameters(std::vector<Parameter> params);

  // left, right: [N,3,32,32] raw pixel values.
  ScoreBatch Forward(const Tensor& left, const Tensor& right) const;

  bool has_global_head() const { return has_global_head_; }
  std::span<Parameter> parameters() { return params_; }
  std::span<const Parameter> parameters() const { return params_; }
  Parameter& parameter(std::string_view name);
  const Parameter& parameter(std::string_view name) const;
  std::size_t ParameterCount() const;
  void ZeroGrad();

 private:
  MultiScoreNet(std::vector<Parameter> params, bool with_global_head);

  Tensor BranchForward(std::size_t branch, const Tensor& input,
                       Tensor* trunk, Tensor* features) const;

  std::vector<Parameter> params_;
  bool has_global_head_ = true;
};

// MSQA checkpoint I/O (little-endian):
//   "MSQA" | u32 version=1 | u32 tensor_count |
//   per tensor: u32 name_len | name | u32 rank | u32 dims[rank] | f32 data
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> SerializeCheckpoint(const MultiScoreNet& net);
MultiScoreNet DeserializeCheckpoint(std::span<const std::uint8_t> bytes);

void SaveCheckpoint(const MultiScoreNet& net, const std::filesystem::path& path);
MultiScoreNet LoadCheckpoint(const std::filesystem::path& path);

}  // namespace stereoscore

#endif  // STEREOSCORE_MODEL_H_
