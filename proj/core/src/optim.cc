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

#include "stereoscore/optim.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "stereoscore/errors.h"

namespace stereoscore {

void SgdConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive, got " +
                      std::to_string(learning_rate));
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must be in [0,1), got " +
                      std::to_string(momentum));
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("weight_decay must be nonnegative, got " +
                      std::to_string(weight_decay));
  }
  if (batch_size <= 0) {
    throw ConfigError("batch_size must be positive, got " +
                      std::to_string(batch_size));
  }
}

Parameter::Parameter(std::string name, Tensor tensor)
    : name_(std::move(name)), tensor_(std::move(tensor)) {
  if (name_.empty()) throw ConfigError("parameter name must be nonempty");
  if (!tensor_.defined()) {
    throw StateError("parameter '" + name_ + "' has no tensor");
  }
  if (!tensor_.requires_grad()) {
    tensor_ = Tensor::FromVector(tensor_.shape(),
                                 {tensor_.data().begin(), tensor_.data().end()},
                                 /*requires_grad=*/true);
  }
  velocity_.assign(tensor_.numel(), 0.0f);
}

Parameter::Parameter(const Parameter& other)
    : name_(other.name_),
      tensor_(other.tensor_.Clone()),
      velocity_(other.velocity_) {
  if (other.tensor_.has_grad()) {
    tensor_.ZeroGrad();
    std::ranges::copy(other.tensor_.grad(), tensor_.mutable_grad().begin());
  }
}

Parameter& Parameter::operator=(const Parameter& other) {
  if (this != &other) *this = Parameter(other);
  return *this;
}

void SgdStep(std::span<Parameter> params, const SgdConfig& config) {
  config.Validate();
  for (const Parameter& p : params) {
    if (!p.tensor().has_grad()) {
      throw StateError("parameter '" + p.name() + "' has no gradient");
    }
  }
  for (Parameter& p : params) {
    auto w = p.tensor().mutable_data();
    auto g = p.tensor().mutable_grad();
    auto v = p.mutable_velocity();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double velocity = config.momentum * v[i] + g[i] +
                              config.weight_decay * static_cast<double>(w[i]);
      v[i] = static_cast<float>(velocity);
      w[i] = static_cast<float>(w[i] - config.learning_rate * velocity);
    }
    std::ranges::fill(g, 0.0f);
  }
}

}  // namespace stereoscore
