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

#include "peauction/diffnet/adam.hpp"

#include <cmath>

#include "peauction/errors.hpp"

namespace peauction::diffnet {

AdamState::AdamState(std::size_t size, AdamConfig config)
    : config_(config), first_moment_(size, 0.0), second_moment_(size, 0.0) {
  if (!(config.learning_rate > 0) || !(config.epsilon > 0) || config.beta1 < 0 ||
      config.beta1 >= 1 || config.beta2 < 0 || config.beta2 >= 1) {
    throw ParameterError("invalid Adam hyperparameters");
  }
}

void AdamState::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != first_moment_.size() || grads.size() != first_moment_.size()) {
    throw ShapeError("Adam step: parameter/gradient size does not match state");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericError("Adam step: non-finite gradient");
  }
  ++step_count_;
  const auto t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    first_moment_[k] = config_.beta1 * first_moment_[k] + (1.0 - config_.beta1) * grads[k];
    second_moment_[k] = config_.beta2 * second_moment_[k] + (1.0 - config_.beta2) * grads[k] * grads[k];
    const double m_hat = first_moment_[k] / c1;
    const double v_hat = second_moment_[k] / c2;
    params[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

NetAdam::NetAdam(const DenseNet& net, AdamConfig config)
    : state_(net.parameter_count(), config),
      flat_params_(net.parameter_count()),
      flat_grads_(net.parameter_count()) {}

void NetAdam::step(DenseNet& net, const Gradient& grad) {
  if (grad.layers.size() != net.num_layers()) throw ShapeError("gradient/net depth mismatch");
  std::size_t off = 0;
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    const auto& l = net.layer(k);
    const auto& g = grad.layers[k];
    if (g.weights.rows() != l.weights.rows() || g.weights.cols() != l.weights.cols() ||
        g.bias.size() != l.bias.size()) {
      throw ShapeError("gradient/net layer shape mismatch");
    }
    if (off + static_cast<std::size_t>(l.weights.size() + l.bias.size()) > flat_params_.size()) {
      throw ShapeError("net grew since optimizer construction");
    }
    Eigen::Map<Eigen::MatrixXd>(flat_params_.data() + off, l.weights.rows(), l.weights.cols()) = l.weights;
    Eigen::Map<Eigen::MatrixXd>(flat_grads_.data() + off, l.weights.rows(), l.weights.cols()) = g.weights;
    off += static_cast<std::size_t>(l.weights.size());
    Eigen::Map<Eigen::VectorXd>(flat_params_.data() + off, l.bias.size()) = l.bias;
    Eigen::Map<Eigen::VectorXd>(flat_grads_.data() + off, l.bias.size()) = g.bias;
    off += static_cast<std::size_t>(l.bias.size());
  }
  if (off != flat_params_.size()) throw ShapeError("net parameter count changed");
  state_.step(flat_params_, flat_grads_);
  off = 0;
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    auto& l = net.layer(k);
    l.weights = Eigen::Map<const Eigen::MatrixXd>(flat_params_.data() + off, l.weights.rows(), l.weights.cols());
    off += static_cast<std::size_t>(l.weights.size());
    l.bias = Eigen::Map<const Eigen::VectorXd>(flat_params_.data() + off, l.bias.size());
    off += static_cast<std::size_t>(l.bias.size());
  }
}

}  // namespace peauction::diffnet
