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

#include "peauction/diffnet/dense_net.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "peauction/errors.hpp"

namespace peauction::diffnet {

namespace {

// tanh(z) = 1 - 2 / (exp(2z) + 1); Eigen vectorizes exp but not tanh for doubles.
template <typename Derived>
void apply_tanh(Eigen::MatrixBase<Derived>& z) {
  z.array() = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0);
}

void validate_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ShapeError("DenseNet needs at least two layer dims");
  for (int d : dims) {
    if (d <= 0) throw ShapeError("DenseNet layer dims must be positive");
  }
}

}  // namespace

Gradient Gradient::zeros(const std::vector<int>& dims) {
  validate_dims(dims);
  Gradient g;
  g.layers.reserve(dims.size() - 1);
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    g.layers.push_back({Eigen::MatrixXd::Zero(dims[k + 1], dims[k]),
                        Eigen::VectorXd::Zero(dims[k + 1])});
  }
  return g;
}

Gradient& Gradient::operator+=(const Gradient& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weights += other.layers[k].weights;
    layers[k].bias += other.layers[k].bias;
  }
  if (other.input) {
    if (input) {
      *input += *other.input;
    } else {
      input = other.input;
    }
  }
  return *this;
}

bool Gradient::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return !input || input->allFinite();
}

DenseNet::DenseNet(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  validate_dims(dims_);
  layers_ = Gradient::zeros(dims_).layers;
}

DenseNet DenseNet::glorot_uniform(std::vector<int> layer_dims, std::mt19937_64& rng) {
  DenseNet net(std::move(layer_dims));
  for (auto& layer : net.layers_) {
    const double a = std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    std::uniform_real_distribution<double> dist(-a, a);
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = dist(rng);
    }
  }
  return net;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers_) count += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return count;
}

void DenseNet::check_input_rows(Eigen::Index rows) const {
  if (dims_.empty()) throw ShapeError("DenseNet is empty");
  if (rows != dims_.front()) {
    throw ShapeError("DenseNet input has " + std::to_string(rows) + " entries, expected " +
                     std::to_string(dims_.front()));
  }
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& input) const {
  check_input_rows(input.size());
  Eigen::VectorXd x = input;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Eigen::VectorXd z = layers_[k].weights * x + layers_[k].bias;
    if (k + 1 < layers_.size()) apply_tanh(z);
    x = std::move(z);
  }
  return x;
}

Eigen::MatrixXd DenseNet::forward_batch(const Eigen::MatrixXd& inputs) const {
  check_input_rows(inputs.rows());
  Eigen::MatrixXd x = inputs;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Eigen::MatrixXd z = layers_[k].weights * x;
    z.colwise() += layers_[k].bias;
    if (k + 1 < layers_.size()) apply_tanh(z);
    x = std::move(z);
  }
  return x;
}

Eigen::MatrixXd DenseNet::forward_batch(const Eigen::MatrixXd& inputs, Tape& tape) const {
  check_input_rows(inputs.rows());
  tape.values.resize(layers_.size() + 1);
  tape.values[0] = inputs;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Eigen::MatrixXd& z = tape.values[k + 1];
    z.noalias() = layers_[k].weights * tape.values[k];
    z.colwise() += layers_[k].bias;
    if (k + 1 < layers_.size()) apply_tanh(z);
  }
  return tape.values.back();
}

Eigen::MatrixXd DenseNet::backward_batch(const Tape& tape, const Eigen::MatrixXd& output_cotangent,
                                         Gradient* param_grad, bool want_input_grad) const {
  if (tape.values.size() != layers_.size() + 1) throw ShapeError("tape does not match net depth");
  if (output_cotangent.rows() != output_dim() || output_cotangent.cols() != tape.values[0].cols()) {
    throw ShapeError("output cotangent shape mismatch");
  }
  if (param_grad && param_grad->layers.size() != layers_.size()) {
    throw ShapeError("gradient buffer does not match net depth");
  }
  Eigen::MatrixXd delta = output_cotangent;  // d/d(pre-activation) of layer k
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Eigen::MatrixXd& below = tape.values[k];
    if (param_grad) {
      param_grad->layers[k].weights.noalias() += delta * below.transpose();
      param_grad->layers[k].bias += delta.rowwise().sum();
    }
    if (k == 0 && !want_input_grad) return {};
    Eigen::MatrixXd up = layers_[k].weights.transpose() * delta;
    if (k > 0) {
      // below = tanh(z): dtanh = 1 - tanh^2
      delta = up.array() * (1.0 - below.array().square());
    } else {
      return up;
    }
  }
  return {};
}

Gradient DenseNet::backward(const Eigen::VectorXd& input, const Eigen::VectorXd& output_cotangent,
                            bool want_input_grad) const {
  check_input_rows(input.size());
  if (output_cotangent.size() != output_dim()) throw ShapeError("output cotangent length mismatch");
  Tape tape;
  forward_batch(input, tape);
  Gradient g = Gradient::zeros(dims_);
  Eigen::MatrixXd in_grad = backward_batch(tape, output_cotangent, &g, want_input_grad);
  if (want_input_grad) g.input = Eigen::VectorXd(in_grad.col(0));
  return g;
}

bool DenseNet::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void DenseNet::save(std::ostream& out) const {
  out << "densenet 1\n";
  out << "layers " << dims_.size();
  for (int d : dims_) out << ' ' << d;
  out << '\n';
  out << std::setprecision(17);
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        out << (c ? " " : "") << l.weights(r, c);
      }
      out << '\n';
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out << (r ? " " : "") << l.bias(r);
    out << '\n';
  }
}

DenseNet DenseNet::load(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "densenet" || version != 1) {
    throw ShapeError("not a densenet v1 checkpoint");
  }
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "layers") throw ShapeError("missing layers line");
  std::vector<int> dims(count);
  for (auto& d : dims) {
    if (!(in >> d)) throw ShapeError("truncated layer dims");
  }
  DenseNet net(dims);
  for (auto& l : net.layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        if (!(in >> l.weights(r, c))) throw ShapeError("truncated weights");
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
      if (!(in >> l.bias(r))) throw ShapeError("truncated biases");
    }
  }
  if (!net.all_finite()) throw NumericError("checkpoint contains non-finite parameters");
  return net;
}

}  // namespace peauction::diffnet
