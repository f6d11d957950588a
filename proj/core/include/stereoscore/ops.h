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

#ifndef STEREOSCORE_OPS_H_
#define STEREOSCORE_OPS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "stereoscore/tensor.h"

namespace stereoscore {

// Differentiable operations. All ops are templated on the scalar type and
// instantiated for float (training) and double (gradient verification).
// Shape violations throw DimensionError naming the offending axis; a
// non-finite result throws NumericError.

// NCHW convolution, square kernel. weights: [C_out, C_in, k, k].
// Output spatial size is floor((H + 2*padding - k) / stride) + 1.
template <typename T>
BasicTensor<T> Conv2d(const BasicTensor<T>& input,
                      const BasicTensor<T>& weights,
                      const BasicTensor<T>& bias, std::size_t stride,
                      std::size_t padding);

// 2x2 max pooling with stride 2. Ties resolve to the first element in scan
// order, which is also where the gradient goes.
template <typename T>
BasicTensor<T> MaxPool2d(const BasicTensor<T>& input);

// input [N, D_in], weights [D_out, D_in], bias [D_out] -> [N, D_out].
template <typename T>
BasicTensor<T> FullyConnected(const BasicTensor<T>& input,
                              const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> Relu(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> Concat(std::span<const BasicTensor<T>> inputs,
                      std::size_t axis);

// [N, ...] -> [N, product(...)].
template <typename T>
BasicTensor<T> Flatten(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> Reshape(const BasicTensor<T>& input, Shape shape);

// Mean absolute error; returns a rank-0 tensor.
template <typename T>
BasicTensor<T> L1Loss(const BasicTensor<T>& prediction,
                      const BasicTensor<T>& target);

template <typename T>
BasicTensor<T> Sum(const BasicTensor<T>& input);

template <typename T>
BasicTensor<T> Scale(const BasicTensor<T>& input, T factor);

template <typename T>
BasicTensor<T> Add(const BasicTensor<T>& a, const BasicTensor<T>& b);

// Elementwise product of equal shapes.
template <typename T>
BasicTensor<T> Mul(const BasicTensor<T>& a, const BasicTensor<T>& b);

}  // namespace stereoscore

#endif  // STEREOSCORE_OPS_H_
