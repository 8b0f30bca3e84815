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

#include "peauction/reference_mechanisms.hpp"

#include <cmath>

#include "peauction/errors.hpp"

namespace peauction {

SmoothFirstPrice::SmoothFirstPrice(int bidders, double temperature)
    : layout_{bidders, 1, 0, 0}, temperature_(temperature) {
  if (bidders < 1) throw ParameterError("first price needs at least one bidder");
  if (!(temperature > 0)) throw ParameterError("temperature must be positive");
}

BatchOutcome SmoothFirstPrice::evaluate(const Eigen::MatrixXd& inputs) const {
  check_inputs(inputs);
  BatchOutcome out = BatchOutcome::zeros(layout_, inputs.cols());
  const Eigen::MatrixXd z = inputs / temperature_;
  const Eigen::RowVectorXd mx = z.colwise().maxCoeff();
  const Eigen::MatrixXd e = (z.rowwise() - mx).array().exp();
  out.allocation = e.array().rowwise() / e.colwise().sum().array();
  out.payments = out.allocation.array() * inputs.array();
  return out;
}

std::pair<BatchOutcome, Eigen::MatrixXd> SmoothFirstPrice::value_and_pullback(
    const Eigen::MatrixXd& inputs, const BatchOutcome& cot, MechanismGradient*) const {
  BatchOutcome out = evaluate(inputs);
  const Eigen::MatrixXd& a = out.allocation;
  // payment_i = a_i b_i
  const Eigen::MatrixXd da = cot.allocation.array() + cot.payments.array() * inputs.array();
  Eigen::MatrixXd d = cot.payments.array() * a.array();
  const Eigen::RowVectorXd inner = (a.array() * da.array()).colwise().sum();
  d.array() += a.array() * (da.rowwise() - inner).array() / temperature_;
  return {std::move(out), std::move(d)};
}

FunctionMechanism::FunctionMechanism(Layout layout, Rule rule) : layout_(layout), rule_(std::move(rule)) {
  if (!rule_) throw ParameterError("FunctionMechanism needs a rule");
}

BatchOutcome FunctionMechanism::evaluate(const Eigen::MatrixXd& inputs) const {
  check_inputs(inputs);
  BatchOutcome out = BatchOutcome::zeros(layout_, inputs.cols());
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    rule_(inputs.col(c), out.allocation.col(c), out.payments.col(c));
  }
  return out;
}

}  // namespace peauction
