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

#include "stereoscore/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "stereoscore/errors.h"

namespace stereoscore {
namespace {

template <typename T>
using NodePtr = std::shared_ptr<internal::Node<T>>;

template <typename T>
using RowMatrix =
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using ConstMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
using MutMap = Eigen::Map<RowMatrix<T>>;

template <typename T>
BasicTensor<T> MakeResult(const char* op, Shape shape, std::vector<T> data,
                          std::vector<NodePtr<T>> parents,
                          std::function<void(internal::Node<T>&)> backward) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw NumericError(std::string(op) + " produced a non-finite value at " +
                         "flat index " + std::to_string(i));
    }
  }
  auto node = std::make_shared<internal::Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  const bool needs_grad =
      GradModeEnabled() &&
      std::any_of(parents.begin(), parents.end(),
                  [](const NodePtr<T>& p) { return p->requires_grad; });
  if (needs_grad) {
    node->requires_grad = true;
    node->leaf = false;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return BasicTensor<T>(std::move(node));
}

void RequireRank(const char* op, const char* arg, const Shape& shape,
                 std::size_t rank) {
  if (shape.size() != rank) {
    throw DimensionError(std::string(op) + ": " + arg + " must have rank " +
                         std::to_string(rank) + ", got shape " +
                         ShapeToString(shape));
  }
}

void RequireAxis(const char* op, const char* what, std::size_t axis,
                 std::size_t got, std::size_t want) {
  if (got != want) {
    throw DimensionError(std::string(op) + ": " + what + " axis " +
                         std::to_string(axis) + " is " + std::to_string(got) +
                         ", expected " + std::to_string(want));
  }
}

void RequireSameShape(const char* op, const Shape& a, const Shape& b) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": rank mismatch " +
                         ShapeToString(a) + " vs " + ShapeToString(b));
  }
  for (std::size_t axis = 0; axis < a.size(); ++axis) {
    RequireAxis(op, "operand", axis, b[axis], a[axis]);
  }
}

struct ConvGeometry {
  std::size_t batch, channels, height, width;
  std::size_t kernel, stride, padding;
  std::size_t out_height, out_width;

  std::size_t rows() const { return channels * kernel * kernel; }
  std::size_t cols() const { return batch * out_height * out_width; }
};

// col is [C*k*k, N*OH*OW].
template <typename T>
void Im2Col(const ConvGeometry& g, const T* in, T* col) {
  const std::size_t plane = g.out_height * g.out_width;
  const std::size_t cols = g.cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel; ++kj) {
        T* dst = col + ((c * g.kernel + ki) * g.kernel + kj) * cols;
        for (std::size_t n = 0; n < g.batch; ++n) {
          const T* src = in + (n * g.channels + c) * g.height * g.width;
          for (std::size_t oy = 0; oy < g.out_height; ++oy) {
            T* row = dst + n * plane + oy * g.out_width;
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                static_cast<std::ptrdiff_t>(g.padding);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) {
              std::fill(row, row + g.out_width, T(0));
              continue;
            }
            const T* src_row = src + iy * g.width;
            for (std::size_t ox = 0; ox < g.out_width; ++ox) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                  static_cast<std::ptrdiff_t>(g.padding);
              row[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width))
                            ? T(0)
                            : src_row[ix];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void Col2ImAdd(const ConvGeometry& g, const T* col, T* in_grad) {
  const std::size_t plane = g.out_height * g.out_width;
  const std::size_t cols = g.cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel; ++kj) {
        const T* src = col + ((c * g.kernel + ki) * g.kernel + kj) * cols;
        for (std::size_t n = 0; n < g.batch; ++n) {
          T* dst = in_grad + (n * g.channels + c) * g.height * g.width;
          for (std::size_t oy = 0; oy < g.out_height; ++oy) {
            const T* row = src + n * plane + oy * g.out_width;
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy * g.stride + ki) -
                static_cast<std::ptrdiff_t>(g.padding);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
            T* dst_row = dst + iy * g.width;
            for (std::size_t ox = 0; ox < g.out_width; ++ox) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * g.stride + kj) -
                  static_cast<std::ptrdiff_t>(g.padding);
              if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.width)) {
                dst_row[ix] += row[ox];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> Conv2d(const BasicTensor<T>& input,
                      const BasicTensor<T>& weights,
                      const BasicTensor<T>& bias, std::size_t stride,
                      std::size_t padding) {
  constexpr const char* kOp = "conv2d";
  RequireRank(kOp, "input", input.shape(), 4);
  RequireRank(kOp, "weights", weights.shape(), 4);
  RequireRank(kOp, "bias", bias.shape(), 1);
  if (stride == 0) throw DimensionError("conv2d: stride must be positive");
  const Shape& in_shape = input.shape();
  const Shape& w_shape = weights.shape();
  RequireAxis(kOp, "weights (square kernel)", 3, w_shape[3], w_shape[2]);
  RequireAxis(kOp, "input channel", 1, in_shape[1], w_shape[1]);
  RequireAxis(kOp, "bias", 0, bias.dim(0), w_shape[0]);

  ConvGeometry g{};
  g.batch = in_shape[0];
  g.channels = in_shape[1];
  g.height = in_shape[2];
  g.width = in_shape[3];
  g.kernel = w_shape[2];
  g.stride = stride;
  g.padding = padding;
  if (g.height + 2 * padding < g.kernel) {
    throw DimensionError("conv2d: input axis 2 (height " +
                         std::to_string(g.height) + ") smaller than kernel " +
                         std::to_string(g.kernel));
  }
  if (g.width + 2 * padding < g.kernel) {
    throw DimensionError("conv2d: input axis 3 (width " +
                         std::to_string(g.width) + ") smaller than kernel " +
                         std::to_string(g.kernel));
  }
  g.out_height = (g.height + 2 * padding - g.kernel) / stride + 1;
  g.out_width = (g.width + 2 * padding - g.kernel) / stride + 1;
  const std::size_t out_channels = w_shape[0];
  const std::size_t plane = g.out_height * g.out_width;

  std::vector<T> col(g.rows() * g.cols());
  Im2Col(g, input.data().data(), col.data());
  RowMatrix<T> product =
      ConstMap<T>(weights.data().data(), out_channels, g.rows()) *
      ConstMap<T>(col.data(), g.rows(), g.cols());

  std::vector<T> out(g.batch * out_channels * plane);
  const auto b = bias.data();
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      const T* src = product.data() + o * g.cols() + n * plane;
      T* dst = out.data() + (n * out_channels + o) * plane;
      for (std::size_t s = 0; s < plane; ++s) dst[s] = src[s] + b[o];
    }
  }
  col = {};

  auto backward = [g, out_channels](internal::Node<T>& self) {
    auto& in_node = *self.parents[0];
    auto& w_node = *self.parents[1];
    auto& b_node = *self.parents[2];
    const std::size_t plane = g.out_height * g.out_width;
    RowMatrix<T> dmat(out_channels, g.cols());
    for (std::size_t n = 0; n < g.batch; ++n) {
      for (std::size_t o = 0; o < out_channels; ++o) {
        const T* src = self.grad.data() + (n * out_channels + o) * plane;
        std::copy(src, src + plane, dmat.data() + o * g.cols() + n * plane);
      }
    }
    if (b_node.requires_grad) {
      auto& db = b_node.EnsureGrad();
      for (std::size_t o = 0; o < out_channels; ++o) db[o] += dmat.row(o).sum();
    }
    if (!w_node.requires_grad && !in_node.requires_grad) return;
    std::vector<T> col(g.rows() * g.cols());
    Im2Col(g, in_node.data.data(), col.data());
    if (w_node.requires_grad) {
      MutMap<T>(w_node.EnsureGrad().data(), out_channels, g.rows())
          .noalias() +=
          dmat * ConstMap<T>(col.data(), g.rows(), g.cols()).transpose();
    }
    if (in_node.requires_grad) {
      MutMap<T>(col.data(), g.rows(), g.cols()).noalias() =
          ConstMap<T>(w_node.data.data(), out_channels, g.rows()).transpose() *
          dmat;
      Col2ImAdd(g, col.data(), in_node.EnsureGrad().data());
    }
  };
  return MakeResult<T>(
      kOp, {g.batch, out_channels, g.out_height, g.out_width}, std::move(out),
      {input.node_ptr(), weights.node_ptr(), bias.node_ptr()},
      std::move(backward));
}

template <typename T>
BasicTensor<T> MaxPool2d(const BasicTensor<T>& input) {
  constexpr const char* kOp = "maxpool2d";
  RequireRank(kOp, "input", input.shape(), 4);
  const Shape& s = input.shape();
  if (s[2] % 2 != 0) {
    throw DimensionError("maxpool2d: input axis 2 (height " +
                         std::to_string(s[2]) + ") is odd");
  }
  if (s[3] % 2 != 0) {
    throw DimensionError("maxpool2d: input axis 3 (width " +
                         std::to_string(s[3]) + ") is odd");
  }
  const std::size_t planes = s[0] * s[1];
  const std::size_t h = s[2], w = s[3], oh = h / 2, ow = w / 2;
  const auto in = input.data();
  std::vector<T> out(planes * oh * ow);
  std::vector<std::uint32_t> argmax(out.size());
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = in.data() + p * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (2 * y) * w + 2 * x;
        const std::size_t candidates[3] = {best + 1, best + w, best + w + 1};
        for (std::size_t c : candidates) {
          if (src[c] > src[best]) best = c;
        }
        const std::size_t o = (p * oh + y) * ow + x;
        out[o] = src[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  auto backward = [argmax = std::move(argmax), h, w,
                   plane_out = oh * ow](internal::Node<T>& self) {
    auto& in_grad = self.parents[0]->EnsureGrad();
    for (std::size_t o = 0; o < argmax.size(); ++o) {
      const std::size_t p = o / plane_out;
      in_grad[p * h * w + argmax[o]] += self.grad[o];
    }
  };
  return MakeResult<T>(kOp, {s[0], s[1], oh, ow}, std::move(out),
                       {input.node_ptr()}, std::move(backward));
}

template <typename T>
BasicTensor<T> FullyConnected(const BasicTensor<T>& input,
                              const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias) {
  constexpr const char* kOp = "fully_connected";
  RequireRank(kOp, "input", input.shape(), 2);
  RequireRank(kOp, "weights", weights.shape(), 2);
  RequireRank(kOp, "bias", bias.shape(), 1);
  const std::size_t n = input.dim(0), d_in = input.dim(1);
  const std::size_t d_out = weights.dim(0);
  RequireAxis(kOp, "input feature", 1, d_in, weights.dim(1));
  RequireAxis(kOp, "bias", 0, bias.dim(0), d_out);

  std::vector<T> out(n * d_out);
  MutMap<T> out_map(out.data(), n, d_out);
  out_map.noalias() = ConstMap<T>(input.data().data(), n, d_in) *
                      ConstMap<T>(weights.data().data(), d_out, d_in).transpose();
  const auto b = bias.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d_out; ++j) out[i * d_out + j] += b[j];
  }

  auto backward = [n, d_in, d_out](internal::Node<T>& self) {
    auto& in_node = *self.parents[0];
    auto& w_node = *self.parents[1];
    auto& b_node = *self.parents[2];
    ConstMap<T> g(self.grad.data(), n, d_out);
    if (in_node.requires_grad) {
      MutMap<T>(in_node.EnsureGrad().data(), n, d_in).noalias() +=
          g * ConstMap<T>(w_node.data.data(), d_out, d_in);
    }
    if (w_node.requires_grad) {
      MutMap<T>(w_node.EnsureGrad().data(), d_out, d_in).noalias() +=
          g.transpose() * ConstMap<T>(in_node.data.data(), n, d_in);
    }
    if (b_node.requires_grad) {
      auto& db = b_node.EnsureGrad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d_out; ++j) db[j] += g(i, j);
      }
    }
  };
  return MakeResult<T>(kOp, {n, d_out}, std::move(out),
                       {input.node_ptr(), weights.node_ptr(), bias.node_ptr()},
                       std::move(backward));
}

template <typename T>
BasicTensor<T> Relu(const BasicTensor<T>& input) {
  const auto in = input.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = in[i] > T(0) ? in[i] : T(0);
  }
  auto backward = [](internal::Node<T>& self) {
    auto& parent = *self.parents[0];
    auto& g = parent.EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (parent.data[i] > T(0)) g[i] += self.grad[i];
    }
  };
  return MakeResult<T>("relu", input.shape(), std::move(out),
                       {input.node_ptr()}, std::move(backward));
}

template <typename T>
BasicTensor<T> Concat(std::span<const BasicTensor<T>> inputs,
                      std::size_t axis) {
  if (inputs.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = inputs[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) +
                         " out of range for rank " +
                         std::to_string(first.size()));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> chunk(inputs.size());
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= first[a];
  std::vector<NodePtr<T>> parents;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Shape& s = inputs[i].shape();
    if (s.size() != first.size()) {
      throw DimensionError("concat: input " + std::to_string(i) +
                           " has rank " + std::to_string(s.size()) +
                           ", expected " + std::to_string(first.size()));
    }
    for (std::size_t a = 0; a < s.size(); ++a) {
      if (a != axis) RequireAxis("concat", "input", a, s[a], first[a]);
    }
    out_shape[axis] += s[axis];
    chunk[i] = inputs[i].numel() / outer;
    parents.push_back(inputs[i].node_ptr());
  }
  std::vector<T> out;
  out.reserve(NumElements(out_shape));
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto src = inputs[i].data().subspan(o * chunk[i], chunk[i]);
      out.insert(out.end(), src.begin(), src.end());
    }
  }
  auto backward = [chunk, outer](internal::Node<T>& self) {
    std::size_t offset = 0;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        auto& parent = *self.parents[i];
        if (parent.requires_grad) {
          auto& g = parent.EnsureGrad();
          for (std::size_t k = 0; k < chunk[i]; ++k) {
            g[o * chunk[i] + k] += self.grad[offset + k];
          }
        }
        offset += chunk[i];
      }
    }
  };
  return MakeResult<T>("concat", std::move(out_shape), std::move(out),
                       std::move(parents), std::move(backward));
}

template <typename T>
BasicTensor<T> Reshape(const BasicTensor<T>& input, Shape shape) {
  if (NumElements(shape) != input.numel()) {
    throw DimensionError("reshape: cannot view " +
                         ShapeToString(input.shape()) + " as " +
                         ShapeToString(shape));
  }
  std::vector<T> out(input.data().begin(), input.data().end());
  auto backward = [](internal::Node<T>& self) {
    auto& g = self.parents[0]->EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  };
  return MakeResult<T>("reshape", std::move(shape), std::move(out),
                       {input.node_ptr()}, std::move(backward));
}

template <typename T>
BasicTensor<T> Flatten(const BasicTensor<T>& input) {
  if (input.rank() < 2) {
    throw DimensionError("flatten: input must have rank >= 2, got " +
                         ShapeToString(input.shape()));
  }
  const std::size_t n = input.dim(0);
  return Reshape(input, {n, input.numel() / n});
}

template <typename T>
BasicTensor<T> L1Loss(const BasicTensor<T>& prediction,
                      const BasicTensor<T>& target) {
  RequireSameShape("l1_loss", prediction.shape(), target.shape());
  const auto p = prediction.data();
  const auto t = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    total += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
  }
  const std::size_t n = p.size();
  auto backward = [n](internal::Node<T>& self) {
    auto& pred = *self.parents[0];
    auto& target = *self.parents[1];
    const T scale = self.grad[0] / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T diff = pred.data[i] - target.data[i];
      const T sign = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
      if (pred.requires_grad) pred.EnsureGrad()[i] += sign * scale;
      if (target.requires_grad) target.EnsureGrad()[i] -= sign * scale;
    }
  };
  return MakeResult<T>("l1_loss", {}, {static_cast<T>(total / n)},
                       {prediction.node_ptr(), target.node_ptr()},
                       std::move(backward));
}

template <typename T>
BasicTensor<T> Sum(const BasicTensor<T>& input) {
  double total = 0.0;
  for (T v : input.data()) total += v;
  auto backward = [](internal::Node<T>& self) {
    auto& g = self.parents[0]->EnsureGrad();
    for (T& v : g) v += self.grad[0];
  };
  return MakeResult<T>("sum", {}, {static_cast<T>(total)}, {input.node_ptr()},
                       std::move(backward));
}

template <typename T>
BasicTensor<T> Scale(const BasicTensor<T>& input, T factor) {
  std::vector<T> out(input.data().begin(), input.data().end());
  for (T& v : out) v *= factor;
  auto backward = [factor](internal::Node<T>& self) {
    auto& g = self.parents[0]->EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  };
  return MakeResult<T>("scale", input.shape(), std::move(out),
                       {input.node_ptr()}, std::move(backward));
}

template <typename T>
BasicTensor<T> Add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  RequireSameShape("add", a.shape(), b.shape());
  std::vector<T> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  auto backward = [](internal::Node<T>& self) {
    for (auto& parent : self.parents) {
      if (!parent->requires_grad) continue;
      auto& g = parent->EnsureGrad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  };
  return MakeResult<T>("add", a.shape(), std::move(out),
                       {a.node_ptr(), b.node_ptr()}, std::move(backward));
}

template <typename T>
BasicTensor<T> Mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  RequireSameShape("mul", a.shape(), b.shape());
  std::vector<T> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  auto backward = [](internal::Node<T>& self) {
    auto& lhs = *self.parents[0];
    auto& rhs = *self.parents[1];
    if (lhs.requires_grad) {
      auto& g = lhs.EnsureGrad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * rhs.data[i];
    }
    if (rhs.requires_grad) {
      auto& g = rhs.EnsureGrad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * lhs.data[i];
    }
  };
  return MakeResult<T>("mul", a.shape(), std::move(out),
                       {a.node_ptr(), b.node_ptr()}, std::move(backward));
}

#define STEREOSCORE_INSTANTIATE_OPS(T)                                        \
  template BasicTensor<T> Conv2d(const BasicTensor<T>&, const BasicTensor<T>&, \
                                 const BasicTensor<T>&, std::size_t,          \
                                 std::size_t);                                \
  template BasicTensor<T> MaxPool2d(const BasicTensor<T>&);                   \
  template BasicTensor<T> FullyConnected(                                     \
      const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);   \
  template BasicTensor<T> Relu(const BasicTensor<T>&);                        \
  template BasicTensor<T> Concat(std::span<const BasicTensor<T>>,             \
                                 std::size_t);                                \
  template BasicTensor<T> Flatten(const BasicTensor<T>&);                     \
  template BasicTensor<T> Reshape(const BasicTensor<T>&, Shape);              \
  template BasicTensor<T> L1Loss(const BasicTensor<T>&,                       \
                                 const BasicTensor<T>&);                      \
  template BasicTensor<T> Sum(const BasicTensor<T>&);                         \
  template BasicTensor<T> Scale(const BasicTensor<T>&, T);                    \
  template BasicTensor<T> Add(const BasicTensor<T>&, const BasicTensor<T>&);  \
  template BasicTensor<T> Mul(const BasicTensor<T>&, const BasicTensor<T>&);

STEREOSCORE_INSTANTIATE_OPS(float)
STEREOSCORE_INSTANTIATE_OPS(double)

#undef STEREOSCORE_INSTANTIATE_OPS

}  // namespace stereoscore
