// Copyright 2026 The peauction Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "peauction/diffnet/dense_net.hpp"

namespace peauction::diffnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers for a flat parameter vector. Adam is elementwise, so one
/// state can drive many independent parameter blocks that step in lockstep.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t size, AdamConfig config);

  /// params -= lr * m_hat / (sqrt(v_hat) + eps), with bias correction.
  /// Throws ShapeError on size mismatch, NumericError on non-finite grads.
  void step(std::span<double> params, std::span<const double> grads);

  std::size_t size() const { return first_moment_.size(); }
  std::uint64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<double>& first_moment() const { return first_moment_; }
  const std::vector<double>& second_moment() const { return second_moment_; }

 private:
  AdamConfig config_;
  std::vector<double> first_moment_;
  std::vector<double> second_moment_;
  std::uint64_t step_count_ = 0;
};

/// Adam over every weight and bias of a DenseNet, in layer order.
class NetAdam {
 public:
  NetAdam() = default;
  NetAdam(const DenseNet& net, AdamConfig config);

  void step(DenseNet& net, const Gradient& grad);
  const AdamState& state() const { return state_; }

 private:
  AdamState state_;
  std::vector<double> flat_params_;
  std::vector<double> flat_grads_;
};

}  // namespace peauction::diffnet
