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

#ifndef STEREOSCORE_OPTIM_H_
#define STEREOSCORE_OPTIM_H_

#include <span>
#include <string>
#include <vector>

#include "stereoscore/tensor.h"

namespace stereoscore {

// Mini-batch SGD hyperparameters. Defaults are the published training
// settings for the multi-score network.
struct SgdConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 128;

  // Throws ConfigError on out-of-range values.
  void Validate() const;
};

// A named trainable tensor plus its momentum buffer.
class Parameter {
 public:
  Parameter(std::string name, Tensor tensor);

  // Deep copy: the copy owns fresh value, gradient and velocity buffers.
  Parameter(const Parameter& other);
  Parameter& operator=(const Parameter& other);
  Parameter(Parameter&&) noexcept = default;
  Parameter& operator=(Parameter&&) noexcept = default;

  const std::string& name() const { return name_; }
  const Tensor& tensor() const { return tensor_; }
  Tensor& tensor() { return tensor_; }
  std::span<const float> velocity() const { return velocity_; }
  std::span<float> mutable_velocity() { return velocity_; }

 private:
  std::string name_;
  Tensor tensor_;
  std::vector<float> velocity_;
};

// One momentum step on every parameter:
//   v <- momentum * v + grad + weight_decay * w
//   w <- w - learning_rate * v
// then zero-fills the gradients. Throws StateError if any parameter has no
// gradient buffer.
void SgdStep(std::span<Parameter> params, const SgdConfig& config);

}  // namespace stereoscore

#endif  // STEREOSCORE_OPTIM_H_
