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

#include <iosfwd>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "peauction/diffnet/dense_net.hpp"
#include "peauction/valuations.hpp"

namespace peauction {

/// Shape of a mechanism input column: n*m bids (row-major, i*m+j), then
/// n*bidder_context_dim bidder contexts, then m*item_context_dim item contexts.
struct Layout {
  int bidders = 1;
  int items = 1;
  int bidder_context_dim = 0;
  int item_context_dim = 0;

  int bid_dim() const { return bidders * items; }
  int input_dim() const {
    return bidders * items + bidders * bidder_context_dim + items * item_context_dim;
  }
  int bid_row(int bidder, int item) const { return bidder * items + item; }
  bool operator==(const Layout&) const = default;
};

/// Outcomes for a batch of profiles, one column per profile.
struct BatchOutcome {
  Eigen::MatrixXd allocation;  // (n*m) x B, row i*m+j
  Eigen::MatrixXd payments;    // n x B

  static BatchOutcome zeros(const Layout& layout, Eigen::Index cols);
};

/// Allocation, payments and utilities for a single profile.
struct AuctionOutcome {
  Eigen::MatrixXd allocation;  // n x m
  Eigen::VectorXd payments;    // n
  Eigen::VectorXd utilities;   // n
};

/// Parameter partials of a RegretNet-style mechanism.
struct MechanismGradient {
  diffnet::Gradient alloc;
  diffnet::Gradient pay;

  MechanismGradient& operator+=(const MechanismGradient& other);
};

/// A (possibly randomized-allocation) auction mechanism evaluated on batches.
///
/// `value_and_pullback` is reverse mode: for a fixed cotangent on the outcome
/// it returns the outcome together with the cotangent on every input entry,
/// and, when `param_grad` is non-null, adds the parameter cotangent into it.
class Mechanism {
 public:
  virtual ~Mechanism() = default;

  virtual const Layout& layout() const = 0;
  virtual BatchOutcome evaluate(const Eigen::MatrixXd& inputs) const = 0;

  virtual bool differentiable() const { return false; }
  virtual bool has_parameters() const { return false; }
  virtual std::pair<BatchOutcome, Eigen::MatrixXd> value_and_pullback(
      const Eigen::MatrixXd& inputs, const BatchOutcome& cotangent,
      MechanismGradient* param_grad) const;

  /// Number of base-network evaluations per profile (1 unless projected).
  virtual std::size_t forward_cost() const { return 1; }

  void check_inputs(const Eigen::MatrixXd& inputs) const;
};

using MechanismPtr = std::shared_ptr<const Mechanism>;

/// Sum_j allocation_j * valuation_j - payment.
double utility(const Eigen::VectorXd& allocation_row, double payment, const Eigen::VectorXd& valuation_row);

/// Utilities of every bidder in every column against `values` (n*m x B).
Eigen::MatrixXd utilities(const Layout& layout, const BatchOutcome& outcome, const Eigen::MatrixXd& values);

/// Single-profile convenience: run `mech` on one input column; utilities are
/// computed against the bids in that column.
AuctionOutcome run_mechanism(const Mechanism& mech, const Eigen::VectorXd& input);
AuctionOutcome run_mechanism(const Mechanism& mech, const ValuationProfile& bids);

/// Input column for a single profile under `layout` (contexts copied when the
/// layout has context dims).
Eigen::VectorXd profile_input(const Layout& layout, const ValuationProfile& profile);

struct FeasibilityReport {
  double max_column_excess = 0.0;  // max_j (sum_i alloc_ij - 1), floored at 0
  double max_ir_violation = 0.0;   // max_i (p_i - sum_j alloc_ij b_ij), floored at 0
  double min_payment = 0.0;
  double tolerance = 1e-6;
  bool passed() const {
    return max_column_excess <= tolerance && max_ir_violation <= tolerance && min_payment >= -tolerance;
  }
};

FeasibilityReport check_outcome(const Layout& layout, const BatchOutcome& outcome,
                                const Eigen::MatrixXd& bids, double tol = 1e-6);
FeasibilityReport check_feasibility_ir(const Mechanism& mech, const Eigen::MatrixXd& inputs,
                                       double tol = 1e-6);

struct ArchitectureConfig {
  int hidden_width = 100;
  int hidden_layers = 3;
};

/// Weights of the allocation and payment networks plus the input layout.
struct MechanismParams {
  Layout layout;
  diffnet::DenseNet alloc_net;  // input_dim -> (n+1)*m logits, item-major with a dummy per item
  diffnet::DenseNet pay_net;    // input_dim -> n fractional-payment logits

  static MechanismParams zeros(const Layout& layout, const ArchitectureConfig& arch);
  static MechanismParams random(const Layout& layout, const ArchitectureConfig& arch, std::mt19937_64& rng);
  void validate() const;
  MechanismGradient zero_gradient() const;
};

/// RegretNet: per-item softmax over bidders plus a dummy slot, and payments
/// sigmoid(logit_i) * sum_j alloc_ij * b_ij.
class RegretNet final : public Mechanism {
 public:
  explicit RegretNet(MechanismParams params);

  const Layout& layout() const override { return params_.layout; }
  BatchOutcome evaluate(const Eigen::MatrixXd& inputs) const override;
  bool differentiable() const override { return true; }
  bool has_parameters() const override { return true; }
  std::pair<BatchOutcome, Eigen::MatrixXd> value_and_pullback(
      const Eigen::MatrixXd& inputs, const BatchOutcome& cotangent,
      MechanismGradient* param_grad) const override;

  const MechanismParams& params() const { return params_; }
  MechanismParams& mutable_params() { return params_; }

 private:
  struct Forward;
  Forward run_forward(const Eigen::MatrixXd& inputs, bool record) const;

  MechanismParams params_;
};

/// Mechanism checkpoint: header with the layout, then both DenseNets.
void save_params(std::ostream& out, const MechanismParams& params);
MechanismParams load_params(std::istream& in);

}  // namespace peauction
