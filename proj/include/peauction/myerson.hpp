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
#include <vector>

#include <Eigen/Dense>

#include "peauction/mechanism.hpp"
#include "peauction/valuations.hpp"

namespace peauction::myerson {

/// Zero of the U[0,1] virtual value 2v - 1.
double myerson_reserve_uniform01();

/// Virtual value v - (1 - F(v)) / f(v) for single-item distributions
/// (uniform on [lo, hi], truncated normal).
double virtual_value(const DistributionSpec& dist, double v);

/// Root of the virtual value by bisection (tol 1e-8). Assumes regularity:
/// the virtual value is increasing on [lo, hi]. Uniform returns (lo+hi)/2
/// analytically when lo = 0.
double myerson_reserve(const DistributionSpec& dist);

/// Second price with reserve, lowest index wins ties.
struct SecondPriceResult {
  int winner = -1;  // -1 when no sale
  Eigen::VectorXd payments;
};
SecondPriceResult run_second_price(const Eigen::VectorXd& bids, double reserve);
AuctionOutcome run_second_price_outcome(const Eigen::VectorXd& bids, double reserve);

/// Second price with reserve as a single-item Mechanism. Its pullback is the
/// almost-everywhere derivative (allocation is piecewise constant; the
/// winner's payment moves one-for-one with the price-setting bid).
class SecondPriceMechanism final : public Mechanism {
 public:
  SecondPriceMechanism(int bidders, double reserve);

  const Layout& layout() const override { return layout_; }
  BatchOutcome evaluate(const Eigen::MatrixXd& inputs) const override;
  bool differentiable() const override { return true; }
  std::pair<BatchOutcome, Eigen::MatrixXd> value_and_pullback(
      const Eigen::MatrixXd& inputs, const BatchOutcome& cotangent,
      MechanismGradient* param_grad) const override;

  double reserve() const { return reserve_; }

 private:
  Layout layout_;
  double reserve_;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo revenue of the optimal single-item auction with n i.i.d.
/// bidders from `dist` (uniform or truncated normal).
McEstimate optimal_revenue_mc(const DistributionSpec& dist, int n, std::size_t samples, std::uint64_t seed);

}  // namespace peauction::myerson
