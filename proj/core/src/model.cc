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

#include "stereoscore/model.h"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <utility>

#include "stereoscore/errors.h"
#include "stereoscore/ops.h"

namespace stereoscore {
namespace {

constexpr std::size_t kKernel = 3;
constexpr std::size_t kPadding = 1;
constexpr std::size_t kParamsPerBranch = 16;  // 8 blocks x (weight, bias)

// The nonlinearity used after every hidden layer.
Tensor Activation(const Tensor& x) { return Relu(x); }

Shape WeightShape(const BlockSpec& block) {
  switch (block.kind) {
    case BlockKind::kLBconv:
    case BlockKind::kPlainConv:
      return {block.out_features, block.in_features, kKernel, kKernel};
    default:
      return {block.out_features, block.in_features};
  }
}

std::size_t FanIn(const Shape& weight_shape) {
  std::size_t fan_in = 1;
  for (std::size_t i = 1; i < weight_shape.size(); ++i) fan_in *= weight_shape[i];
  return fan_in;
}

void AppendLayout(const std::string& prefix,
                  const std::vector<BlockSpec>& blocks,
                  std::vector<ParameterSpec>* out) {
  for (const BlockSpec& block : blocks) {
    out->push_back({prefix + "/" + block.name + "/weight", WeightShape(block)});
    out->push_back({prefix + "/" + block.name + "/bias", {block.out_features}});
  }
}

void RequirePatchBatch(const char* which, const Tensor& t) {
  const Shape& s = t.shape();
  if (s.size() != 4) {
    throw DimensionError(std::string(which) + " patches must have rank 4, got " +
                         ShapeToString(s));
  }
  if (s[1] != 3) {
    throw DimensionError(std::string(which) + " patches axis 1 (channels) is " +
                         std::to_string(s[1]) + ", expected 3");
  }
  if (s[2] != kPatchSize) {
    throw DimensionError(std::string(which) + " patches axis 2 (height) is " +
                         std::to_string(s[2]) + ", expected 32");
  }
  if (s[3] != kPatchSize) {
    throw DimensionError(std::string(which) + " patches axis 3 (width) is " +
                         std::to_string(s[3]) + ", expected 32");
  }
}

}  // namespace

std::vector<BlockSpec> BranchBlocks(std::size_t in_channels) {
  return {
      {BlockKind::kLBconv, "LBconv1/conv", in_channels, 32},
      {BlockKind::kLBconv, "LBconv2/conv", 32, 64},
      {BlockKind::kPlainConv, "PlainConv1/conv", 64, 128},
      {BlockKind::kPlainConv, "PlainConv2/conv", 128, 128},
      {BlockKind::kLBconv, "LBconv3/conv", 128, kTrunkChannels},
      {BlockKind::kLBflat, "LBflat/fc", kTrunkFeatures, 1024},
      {BlockKind::kLBFcr, "LBFcr/fc", 1024, kBranchFeatures},
      {BlockKind::kScore, "score/fc", kBranchFeatures, 1},
  };
}

std::vector<BlockSpec> GlobalHeadBlocks() {
  return {
      {BlockKind::kLBconct, "LBconct/fc", kHeadInputFeatures, 512},
      {BlockKind::kScore, "score/fc", 512, 1},
  };
}

std::vector<ParameterSpec> CanonicalLayout(bool with_global_head) {
  std::vector<ParameterSpec> layout;
  AppendLayout("left", BranchBlocks(3), &layout);
  AppendLayout("right", BranchBlocks(3), &layout);
  AppendLayout("stereo", BranchBlocks(6), &layout);
  if (with_global_head) AppendLayout("global", GlobalHeadBlocks(), &layout);
  return layout;
}

MultiScoreNet::MultiScoreNet(std::vector<Parameter> params,
                             bool with_global_head)
    : params_(std::move(params)), has_global_head_(with_global_head) {}

MultiScoreNet MultiScoreNet::Build(std::uint64_t seed, bool with_global_head) {
  std::mt19937_64 rng(seed);
  std::vector<Parameter> params;
  for (const ParameterSpec& spec : CanonicalLayout(with_global_head)) {
    const std::size_t n = NumElements(spec.shape);
    std::vector<float> values(n, 0.0f);
    if (spec.shape.size() > 1) {
      const float bound =
          static_cast<float>(std::sqrt(1.0 / static_cast<double>(FanIn(spec.shape))));
      std::uniform_real_distribution<float> dist(-bound, bound);
      for (float& v : values) v = dist(rng);
    }
    params.emplace_back(spec.name,
                        Tensor::FromVector(spec.shape, std::move(values), true));
  }
  return MultiScoreNet(std::move(params), with_global_head);
}

MultiScoreNet MultiScoreNet::FromParameters(std::vector<Parameter> params) {
  bool with_head = false;
  for (const Parameter& p : params) {
    if (p.name().starts_with("global/")) with_head = true;
  }
  const std::vector<ParameterSpec> layout = CanonicalLayout(with_head);
  std::map<std::string, Parameter*> by_name;
  for (Parameter& p : params) {
    if (!by_name.emplace(p.name(), &p).second) {
      throw ShapeError("duplicate tensor '" + p.name() + "'");
    }
  }
  std::vector<Parameter> ordered;
  ordered.reserve(layout.size());
  for (const ParameterSpec& spec : layout) {
    auto it = by_name.find(spec.name);
    if (it == by_name.end()) {
      throw ShapeError("missing tensor '" + spec.name + "'");
    }
    if (it->second->tensor().shape() != spec.shape) {
      throw ShapeError("tensor '" + spec.name + "' has shape " +
                       ShapeToString(it->second->tensor().shape()) +
                       ", expected " + ShapeToString(spec.shape));
    }
    ordered.push_back(std::move(*it->second));
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw ShapeError("unexpected tensor '" + by_name.begin()->first + "'");
  }
  return MultiScoreNet(std::move(ordered), with_head);
}

Parameter& MultiScoreNet::parameter(std::string_view name) {
  for (Parameter& p : params_) {
    if (p.name() == name) return p;
  }
  throw StateError("no parameter named '" + std::string(name) + "'");
}

const Parameter& MultiScoreNet::parameter(std::string_view name) const {
  return const_cast<MultiScoreNet*>(this)->parameter(name);
}

std::size_t MultiScoreNet::ParameterCount() const {
  std::size_t total = 0;
  for (const Parameter& p : params_) total += p.tensor().numel();
  return total;
}

void MultiScoreNet::ZeroGrad() {
  for (Parameter& p : params_) p.tensor().ZeroGrad();
}

Tensor MultiScoreNet::BranchForward(std::size_t branch, const Tensor& input,
                                    Tensor* trunk, Tensor* features) const {
  const std::size_t base = branch * kParamsPerBranch;
  const auto blocks = BranchBlocks(branch == 2 ? 6 : 3);
  Tensor x = input;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Tensor& w = params_[base + 2 * i].tensor();
    const Tensor& b = params_[base + 2 * i + 1].tensor();
    switch (blocks[i].kind) {
      case BlockKind::kLBconv:
        x = MaxPool2d(Activation(Conv2d(x, w, b, 1, kPadding)));
        break;
      case BlockKind::kPlainConv:
        x = Activation(Conv2d(x, w, b, 1, kPadding));
        break;
      case BlockKind::kLBflat:
        *trunk = x;
        x = Activation(FullyConnected(Flatten(x), w, b));
        break;
      case BlockKind::kLBFcr:
        x = Activation(FullyConnected(x, w, b));
        *features = x;
        break;
      default:
        x = FullyConnected(x, w, b);
        break;
    }
  }
  return x;
}

ScoreQuad ScoreBatch::Quad(std::size_t i) const {
  ScoreQuad q;
  q.q_left = left.data()[i];
  q.q_right = right.data()[i];
  q.q_stereo = stereo.data()[i];
  q.q_global = global.defined() ? global.data()[i] : q.q_stereo;
  return q;
}

ScoreBatch MultiScoreNet::Forward(const Tensor& left, const Tensor& right) const {
  RequirePatchBatch("left", left);
  RequirePatchBatch("right", right);
  if (left.dim(0) != right.dim(0)) {
    throw DimensionError("left/right batch axis 0 differs: " +
                         std::to_string(left.dim(0)) + " vs " +
                         std::to_string(right.dim(0)));
  }
  ScoreBatch out;
  std::array<Tensor, 3> features;
  out.left = BranchForward(0, left, &out.left_trunk, &features[0]);
  out.right = BranchForward(1, right, &out.right_trunk, &features[1]);
  const std::array<Tensor, 2> views = {left, right};
  out.stereo = BranchForward(2, Concat<float>(views, 1), &out.stereo_trunk,
                             &features[2]);
  out.head_input = Concat<float>(features, 1);
  if (has_global_head_) {
    const std::size_t base = 3 * kParamsPerBranch;
    Tensor hidden = Activation(FullyConnected(
        out.head_input, params_[base].tensor(), params_[base + 1].tensor()));
    out.global = FullyConnected(hidden, params_[base + 2].tensor(),
                                params_[base + 3].tensor());
  }
  return out;
}

namespace {

class ByteWriter {
 public:
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void Raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> Take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t U32(const std::string& what) {
    Need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string Raw(std::size_t n, const std::string& what) {
    Need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void Floats(std::span<float> out, const std::string& what) {
    Need(out.size() * 4, what);
    for (float& v : out) {
      std::uint32_t bits = 0;
      for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
      v = std::bit_cast<float>(bits);
      pos_ += 4;
    }
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void Need(std::size_t n, const std::string& what) {
    if (remaining() < n) {
      throw TruncatedError("checkpoint truncated while reading " + what +
                           " (need " + std::to_string(n) + " bytes, have " +
                           std::to_string(remaining()) + ")");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> SerializeCheckpoint(const MultiScoreNet& net) {
  ByteWriter w;
  w.Raw("MSQA");
  w.U32(kCheckpointVersion);
  w.U32(static_cast<std::uint32_t>(net.parameters().size()));
  for (const Parameter& p : net.parameters()) {
    w.U32(static_cast<std::uint32_t>(p.name().size()));
    w.Raw(p.name());
    const Shape& shape = p.tensor().shape();
    w.U32(static_cast<std::uint32_t>(shape.size()));
    for (std::size_t d : shape) w.U32(static_cast<std::uint32_t>(d));
    for (float v : p.tensor().data()) w.F32(v);
  }
  return w.Take();
}

MultiScoreNet DeserializeCheckpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < 4) throw TruncatedError("checkpoint shorter than its magic");
  if (r.Raw(4, "magic") != "MSQA") throw MagicError("checkpoint magic is not MSQA");
  const std::uint32_t version = r.U32("version");
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) +
                       " unsupported (expected 1)");
  }
  const std::uint32_t count = r.U32("tensor count");
  // Validate names and shapes against the canonical layout before reading
  // any payload, so a wrong-shaped tensor is reported by name.
  std::map<std::string, Shape> canonical;
  for (bool head : {true, false}) {
    for (auto& spec : CanonicalLayout(head)) canonical.emplace(spec.name, spec.shape);
  }
  std::vector<Parameter> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "tensor " + std::to_string(i);
    const std::uint32_t name_len = r.U32(where + " name length");
    const std::string name = r.Raw(name_len, where + " name");
    const std::uint32_t rank = r.U32("rank of '" + name + "'");
    Shape shape(rank);
    for (auto& d : shape) d = r.U32("dims of '" + name + "'");
    auto it = canonical.find(name);
    if (it == canonical.end()) throw ShapeError("unexpected tensor '" + name + "'");
    if (it->second != shape) {
      throw ShapeError("tensor '" + name + "' has shape " + ShapeToString(shape) +
                       ", expected " + ShapeToString(it->second));
    }
    std::vector<float> values(NumElements(shape));
    r.Floats(values, "data of '" + name + "'");
    params.emplace_back(name, Tensor::FromVector(shape, std::move(values), true));
  }
  if (r.remaining() != 0) {
    throw FormatError("checkpoint has " + std::to_string(r.remaining()) +
                      " trailing bytes");
  }
  return MultiScoreNet::FromParameters(std::move(params));
}

void SaveCheckpoint(const MultiScoreNet& net, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = SerializeCheckpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

MultiScoreNet LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  try {
    return DeserializeCheckpoint(bytes);
  } catch (const MagicError& e) {
    throw MagicError(where + e.what());
  } catch (const VersionError& e) {
    throw VersionError(where + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(where + e.what());
  } catch (const TruncatedError& e) {
    throw TruncatedError(where + e.what());
  } catch (const FormatError& e) {
    throw FormatError(where + e.what());
  }
}

}  // namespace stereoscore
