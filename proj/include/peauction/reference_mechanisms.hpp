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

#include <functional>

#include "peauction/mechanism.hpp"

namespace peauction {

/// Single-item first-price auction with a logistic tie region: bidder i wins
/// with softmax(b / temperature) probability and pays her own bid when she
/// wins. Not DSIC; used as a known-regret reference for misreport search.
class SmoothFirstPrice final : public Mechanism {
 public:
  SmoothFirstPrice(int bidders, double temperature);

  const Layout& layout() const override { return layout_; }
  BatchOutcome evaluate(const Eigen::MatrixXd& inputs) const override;
  bool differentiable() const override { return true; }
  std::pair<BatchOutcome, Eigen::MatrixXd> value_and_pullback(
      const Eigen::MatrixXd& inputs, const BatchOutcome& cotangent,
      MechanismGradient* param_grad) const override;

 private:
  Layout layout_;
  double temperature_;
};

/// Mechanism defined by a per-column callback; not differentiable.
class FunctionMechanism final : public Mechanism {
 public:
  /// Callback receives one input column and fills allocation (n*m) and payments (n).
  using Rule = std::function<void(const Eigen::VectorXd& input, Eigen::Ref<Eigen::VectorXd> allocation,
                                  Eigen::Ref<Eigen::VectorXd> payments)>;

  FunctionMechanism(Layout layout, Rule rule);

  const Layout& layout() const override { return layout_; }
  BatchOutcome evaluate(const Eigen::MatrixXd& inputs) const override;

 private:
  Layout layout_;
  Rule rule_;
};

}  // namespace peauction
