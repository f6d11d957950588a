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

#ifndef STEREOSCORE_TENSOR_H_
#define STEREOSCORE_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stereoscore {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

namespace internal {

// One vertex of the reverse-mode graph. Ops create a node per output; the
// node keeps its inputs alive until Backward() consumes it.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // Empty until a gradient is accumulated.
  bool requires_grad = false;
  bool leaf = true;
  bool consumed = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads `grad` of this node and accumulates into the parents' gradients.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return leaf; }
  std::vector<T>& EnsureGrad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

}  // namespace internal

// Dense row-major tensor with an optional gradient.
//
// A tensor is a handle: copies share storage and graph position, like the
// tensors of mainstream autodiff frameworks. Use Clone() for a deep copy.
// Forward ops never modify their inputs.
template <typename T>
class BasicTensor {
 public:
  using Scalar = T;

  BasicTensor() = default;

  static BasicTensor Zeros(Shape shape, bool requires_grad = false);
  static BasicTensor Full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor FromVector(Shape shape, std::vector<T> values,
                                bool requires_grad = false);
  static BasicTensor Scalar0(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const T> data() const;
  // Writable view of the values. Intended for leaves (parameters, inputs);
  // modifying an interior node invalidates its recorded graph.
  std::span<T> mutable_data();

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  // Allocates (if needed) and zero-fills the gradient buffer.
  void ZeroGrad();
  // Releases the gradient buffer.
  void ClearGrad();

  // Value of a single-element tensor.
  T item() const;

  // Deep copy of values with no graph history and no gradient.
  BasicTensor Clone() const;

  internal::Node<T>& node() const { return *node_; }
  const std::shared_ptr<internal::Node<T>>& node_ptr() const { return node_; }
  explicit BasicTensor(std::shared_ptr<internal::Node<T>> node)
      : node_(std::move(node)) {}

 private:
  std::shared_ptr<internal::Node<T>> node_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

// While alive, ops on the current thread record no graph. Used for
// inference so concurrent forward passes never touch shared state.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradModeEnabled();

// Reverse-mode sweep from a single-element loss. Accumulates into the
// gradient of every reachable tensor that requires it, then releases the
// graph. A consumed loss cannot be differentiated again.
template <typename T>
void Backward(const BasicTensor<T>& loss);

}  // namespace stereoscore

#endif  // STEREOSCORE_TENSOR_H_
