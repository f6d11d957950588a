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

#include "stereoscore/tensor.h"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "stereoscore/errors.h"

namespace stereoscore {
namespace {

thread_local bool grad_mode_enabled = true;

template <typename T>
internal::Node<T>& Checked(const std::shared_ptr<internal::Node<T>>& node) {
  if (node == nullptr) throw StateError("use of an undefined tensor");
  return *node;
}

}  // namespace

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Zeros(Shape shape, bool requires_grad) {
  return Full(std::move(shape), T(0), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Full(Shape shape, T value, bool requires_grad) {
  const std::size_t n = NumElements(shape);
  return FromVector(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::FromVector(Shape shape, std::vector<T> values,
                                          bool requires_grad) {
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    if (shape[axis] == 0) {
      throw DimensionError("tensor axis " + std::to_string(axis) +
                           " has zero length");
    }
  }
  if (NumElements(shape) != values.size()) {
    throw DimensionError("shape " + ShapeToString(shape) + " needs " +
                         std::to_string(NumElements(shape)) +
                         " values, got " + std::to_string(values.size()));
  }
  auto node = std::make_shared<internal::Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Scalar0(T value, bool requires_grad) {
  return FromVector({}, {value}, requires_grad);
}

template <typename T>
const Shape& BasicTensor<T>::shape() const {
  return Checked(node_).shape;
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for rank " + std::to_string(s.size()));
  }
  return s[axis];
}

template <typename T>
std::size_t BasicTensor<T>::numel() const {
  return Checked(node_).data.size();
}

template <typename T>
std::span<const T> BasicTensor<T>::data() const {
  return Checked(node_).data;
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_data() {
  return Checked(node_).data;
}

template <typename T>
bool BasicTensor<T>::requires_grad() const {
  return Checked(node_).requires_grad;
}

template <typename T>
bool BasicTensor<T>::has_grad() const {
  return !Checked(node_).grad.empty();
}

template <typename T>
std::span<const T> BasicTensor<T>::grad() const {
  return Checked(node_).grad;
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_grad() {
  return Checked(node_).grad;
}

template <typename T>
void BasicTensor<T>::ZeroGrad() {
  auto& node = Checked(node_);
  node.grad.assign(node.data.size(), T(0));
}

template <typename T>
void BasicTensor<T>::ClearGrad() {
  auto& node = Checked(node_);
  node.grad.clear();
  node.grad.shrink_to_fit();
}

template <typename T>
T BasicTensor<T>::item() const {
  const auto& node = Checked(node_);
  if (node.data.size() != 1) {
    throw DimensionError("item() on tensor of shape " +
                         ShapeToString(node.shape));
  }
  return node.data[0];
}

template <typename T>
BasicTensor<T> BasicTensor<T>::Clone() const {
  const auto& node = Checked(node_);
  return FromVector(node.shape, node.data, node.requires_grad);
}

NoGradGuard::NoGradGuard() : previous_(grad_mode_enabled) {
  grad_mode_enabled = false;
}

NoGradGuard::~NoGradGuard() { grad_mode_enabled = previous_; }

bool GradModeEnabled() { return grad_mode_enabled; }

template <typename T>
void Backward(const BasicTensor<T>& loss) {
  if (!loss.defined()) throw StateError("backward on an undefined tensor");
  auto& root = loss.node();
  if (root.data.size() != 1) {
    throw StateError("backward needs a single-element loss, got shape " +
                     ShapeToString(root.shape));
  }
  if (root.consumed) {
    throw StateError("backward called twice on the same graph");
  }
  if (!root.requires_grad) {
    throw StateError("loss does not depend on any tensor requiring grad");
  }

  // Iterative post-order DFS gives a topological order (inputs first).
  using NodePtr = std::shared_ptr<internal::Node<T>>;
  std::vector<NodePtr> order;
  std::unordered_set<const internal::Node<T>*> visited;
  std::vector<std::pair<NodePtr, std::size_t>> stack;
  stack.emplace_back(loss.node_ptr(), 0);
  visited.insert(loss.node_ptr().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (node->consumed) {
      throw StateError("backward through a graph that was already consumed");
    }
    if (next < node->parents.size()) {
      NodePtr parent = node->parents[next++];
      if (parent->requires_grad && visited.insert(parent.get()).second) {
        stack.emplace_back(std::move(parent), 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.EnsureGrad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    internal::Node<T>& node = **it;
    if (!node.is_leaf() && !node.grad.empty()) node.backward(node);
  }
  for (const NodePtr& node : order) {
    if (node->is_leaf()) continue;
    node->parents.clear();
    node->backward = nullptr;
    node->grad.clear();
    node->consumed = true;
  }
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template void Backward<float>(const BasicTensor<float>&);
template void Backward<double>(const BasicTensor<double>&);

}  // namespace stereoscore
