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
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace peauction::diffnet {

/// One affine layer: y = W x + b.
struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Partials of a scalar <output, cotangent> with respect to every parameter
/// (same shapes as the net) and, when requested, the input.
struct Gradient {
  std::vector<DenseLayer> layers;
  std::optional<Eigen::VectorXd> input;

  /// Zero gradient matching the shapes in `dims`.
  static Gradient zeros(const std::vector<int>& dims);
  Gradient& operator+=(const Gradient& other);
  bool all_finite() const;
};

/// Activations recorded by a batched forward pass, consumed by backward.
/// values[0] is the input batch; values[k] the output of layer k (tanh'd for
/// hidden layers, raw for the last).
struct Tape {
  std::vector<Eigen::MatrixXd> values;
};

/// Fully-connected network with tanh hidden activations and a linear output.
///
/// Batched entry points take one sample per column. The topology is fixed at
/// construction; backward is explicit backprop over that topology.
class DenseNet {
 public:
  DenseNet() = default;

  /// All-zero weights and biases. Requires at least two positive dims.
  explicit DenseNet(std::vector<int> layer_dims);

  /// Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)), zero biases.
  static DenseNet glorot_uniform(std::vector<int> layer_dims, std::mt19937_64& rng);

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t parameter_count() const;

  DenseLayer& layer(std::size_t k) { return layers_.at(k); }
  const DenseLayer& layer(std::size_t k) const { return layers_.at(k); }

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs, Tape& tape) const;

  /// Reverse-mode partials of <forward(input), output_cotangent>.
  Gradient backward(const Eigen::VectorXd& input, const Eigen::VectorXd& output_cotangent,
                    bool want_input_grad) const;

  /// Batched backward. Parameter partials are summed over columns and added
  /// into `param_grad` when it is non-null. Returns input cotangents (one
  /// column per sample) when `want_input_grad`, otherwise an empty matrix.
  Eigen::MatrixXd backward_batch(const Tape& tape, const Eigen::MatrixXd& output_cotangent,
                                 Gradient* param_grad, bool want_input_grad) const;

  bool all_finite() const;

  /// Text checkpoint; layout documented in docs/checkpoint_format.md.
  void save(std::ostream& out) const;
  static DenseNet load(std::istream& in);

 private:
  void check_input_rows(Eigen::Index rows) const;

  std::vector<int> dims_;
  std::vector<DenseLayer> layers_;
};

}  // namespace peauction::diffnet
