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

#include "peauction/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "peauction/errors.hpp"

namespace peauction {

BatchOutcome BatchOutcome::zeros(const Layout& layout, Eigen::Index cols) {
  return {Eigen::MatrixXd::Zero(layout.bid_dim(), cols), Eigen::MatrixXd::Zero(layout.bidders, cols)};
}

MechanismGradient& MechanismGradient::operator+=(const MechanismGradient& other) {
  alloc += other.alloc;
  pay += other.pay;
  return *this;
}

std::pair<BatchOutcome, Eigen::MatrixXd> Mechanism::value_and_pullback(const Eigen::MatrixXd&,
                                                                       const BatchOutcome&,
                                                                       MechanismGradient*) const {
  throw ParameterError("mechanism is not differentiable");
}

void Mechanism::check_inputs(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != layout().input_dim()) {
    throw ShapeError("mechanism input has " + std::to_string(inputs.rows()) + " rows, expected " +
                     std::to_string(layout().input_dim()));
  }
}

double utility(const Eigen::VectorXd& allocation_row, double payment, const Eigen::VectorXd& valuation_row) {
  if (allocation_row.size() != valuation_row.size()) throw ShapeError("utility: length mismatch");
  return allocation_row.dot(valuation_row) - payment;
}

Eigen::MatrixXd utilities(const Layout& layout, const BatchOutcome& outcome, const Eigen::MatrixXd& values) {
  const int n = layout.bidders;
  const int m = layout.items;
  if (values.rows() < layout.bid_dim() || values.cols() != outcome.allocation.cols()) {
    throw ShapeError("utilities: value matrix shape mismatch");
  }
  Eigen::MatrixXd u = -outcome.payments;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const int r = layout.bid_row(i, j);
      u.row(i).array() += outcome.allocation.row(r).array() * values.row(r).array();
    }
  }
  return u;
}

Eigen::VectorXd profile_input(const Layout& layout, const ValuationProfile& profile) {
  if (profile.bidders() != layout.bidders || profile.items() != layout.items) {
    throw ShapeError("profile shape does not match mechanism layout");
  }
  Eigen::VectorXd x(layout.input_dim());
  Eigen::Index r = 0;
  for (int i = 0; i < layout.bidders; ++i) {
    for (int j = 0; j < layout.items; ++j) x(r++) = profile.values(i, j);
  }
  if (layout.bidder_context_dim > 0) {
    if (!profile.bidder_contexts || profile.bidder_contexts->cols() != layout.bidder_context_dim) {
      throw ShapeError("profile lacks bidder contexts required by the layout");
    }
    for (int i = 0; i < layout.bidders; ++i) {
      for (int d = 0; d < layout.bidder_context_dim; ++d) x(r++) = (*profile.bidder_contexts)(i, d);
    }
  }
  if (layout.item_context_dim > 0) {
    if (!profile.item_contexts || profile.item_contexts->cols() != layout.item_context_dim) {
      throw ShapeError("profile lacks item contexts required by the layout");
    }
    for (int j = 0; j < layout.items; ++j) {
      for (int d = 0; d < layout.item_context_dim; ++d) x(r++) = (*profile.item_contexts)(j, d);
    }
  }
  return x;
}

AuctionOutcome run_mechanism(const Mechanism& mech, const Eigen::VectorXd& input) {
  const Layout& L = mech.layout();
  Eigen::MatrixXd col = input;
  mech.check_inputs(col);
  const BatchOutcome out = mech.evaluate(col);
  if (!out.allocation.allFinite() || !out.payments.allFinite()) {
    throw NumericError("mechanism produced non-finite output");
  }
  AuctionOutcome res;
  res.allocation.resize(L.bidders, L.items);
  for (int i = 0; i < L.bidders; ++i) {
    for (int j = 0; j < L.items; ++j) res.allocation(i, j) = out.allocation(L.bid_row(i, j), 0);
  }
  res.payments = out.payments.col(0);
  res.utilities = utilities(L, out, col).col(0);
  return res;
}

AuctionOutcome run_mechanism(const Mechanism& mech, const ValuationProfile& bids) {
  return run_mechanism(mech, profile_input(mech.layout(), bids));
}

FeasibilityReport check_outcome(const Layout& layout, const BatchOutcome& outcome,
                                const Eigen::MatrixXd& bids, double tol) {
  FeasibilityReport rep;
  rep.tolerance = tol;
  const Eigen::Index B = outcome.allocation.cols();
  for (Eigen::Index c = 0; c < B; ++c) {
    for (int j = 0; j < layout.items; ++j) {
      double mass = 0.0;
      for (int i = 0; i < layout.bidders; ++i) mass += outcome.allocation(layout.bid_row(i, j), c);
      rep.max_column_excess = std::max(rep.max_column_excess, mass - 1.0);
    }
    for (int i = 0; i < layout.bidders; ++i) {
      double value = 0.0;
      for (int j = 0; j < layout.items; ++j) {
        value += outcome.allocation(layout.bid_row(i, j), c) * bids(layout.bid_row(i, j), c);
      }
      rep.max_ir_violation = std::max(rep.max_ir_violation, outcome.payments(i, c) - value);
      rep.min_payment = std::min(rep.min_payment, outcome.payments(i, c));
    }
  }
  return rep;
}

FeasibilityReport check_feasibility_ir(const Mechanism& mech, const Eigen::MatrixXd& inputs, double tol) {
  mech.check_inputs(inputs);
  return check_outcome(mech.layout(), mech.evaluate(inputs), inputs, tol);
}

// ---------------------------------------------------------------------------
// RegretNet

namespace {

std::vector<int> net_dims(int in, int out, const ArchitectureConfig& arch) {
  if (arch.hidden_layers < 0 || (arch.hidden_layers > 0 && arch.hidden_width < 1)) {
    throw ParameterError("invalid architecture");
  }
  std::vector<int> dims{in};
  for (int k = 0; k < arch.hidden_layers; ++k) dims.push_back(arch.hidden_width);
  dims.push_back(out);
  return dims;
}

}  // namespace

MechanismParams MechanismParams::zeros(const Layout& layout, const ArchitectureConfig& arch) {
  const int in = layout.input_dim();
  return {layout, diffnet::DenseNet(net_dims(in, (layout.bidders + 1) * layout.items, arch)),
          diffnet::DenseNet(net_dims(in, layout.bidders, arch))};
}

MechanismParams MechanismParams::random(const Layout& layout, const ArchitectureConfig& arch,
                                        std::mt19937_64& rng) {
  const int in = layout.input_dim();
  auto alloc = diffnet::DenseNet::glorot_uniform(net_dims(in, (layout.bidders + 1) * layout.items, arch), rng);
  auto pay = diffnet::DenseNet::glorot_uniform(net_dims(in, layout.bidders, arch), rng);
  return {layout, std::move(alloc), std::move(pay)};
}

void MechanismParams::validate() const {
  if (layout.bidders < 1 || layout.items < 1) throw ShapeError("layout needs n, m >= 1");
  if (alloc_net.layer_dims().empty() || pay_net.layer_dims().empty()) throw ShapeError("networks missing");
  if (alloc_net.input_dim() != layout.input_dim() || pay_net.input_dim() != layout.input_dim()) {
    throw ShapeError("network input dim does not match layout");
  }
  if (alloc_net.output_dim() != (layout.bidders + 1) * layout.items) {
    throw ShapeError("allocation network must output (n+1)*m logits");
  }
  if (pay_net.output_dim() != layout.bidders) throw ShapeError("payment network must output n logits");
}

MechanismGradient MechanismParams::zero_gradient() const {
  return {diffnet::Gradient::zeros(alloc_net.layer_dims()), diffnet::Gradient::zeros(pay_net.layer_dims())};
}

struct RegretNet::Forward {
  diffnet::Tape alloc_tape;
  diffnet::Tape pay_tape;
  Eigen::MatrixXd full_alloc;  // (n+1)*m x B softmax probabilities, item-major
  Eigen::MatrixXd fraction;    // n x B sigmoid
  Eigen::MatrixXd value;       // n x B  sum_j alloc_ij b_ij
  BatchOutcome outcome;
};

RegretNet::RegretNet(MechanismParams params) : params_(std::move(params)) { params_.validate(); }

RegretNet::Forward RegretNet::run_forward(const Eigen::MatrixXd& inputs, bool record) const {
  check_inputs(inputs);
  const Layout& L = params_.layout;
  const int n = L.bidders;
  const int m = L.items;
  const Eigen::Index B = inputs.cols();
  Forward f;
  const Eigen::MatrixXd logits =
      record ? params_.alloc_net.forward_batch(inputs, f.alloc_tape) : params_.alloc_net.forward_batch(inputs);
  const Eigen::MatrixXd pay_logits =
      record ? params_.pay_net.forward_batch(inputs, f.pay_tape) : params_.pay_net.forward_batch(inputs);

  f.full_alloc.resize(logits.rows(), B);
  for (int j = 0; j < m; ++j) {
    auto block = logits.middleRows(j * (n + 1), n + 1);
    Eigen::RowVectorXd mx = block.colwise().maxCoeff();
    Eigen::MatrixXd e = (block.rowwise() - mx).array().exp();
    Eigen::RowVectorXd s = e.colwise().sum();
    f.full_alloc.middleRows(j * (n + 1), n + 1) = e.array().rowwise() / s.array();
  }
  f.fraction = 1.0 / (1.0 + (-pay_logits.array()).exp());

  f.outcome.allocation.resize(L.bid_dim(), B);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) f.outcome.allocation.row(L.bid_row(i, j)) = f.full_alloc.row(j * (n + 1) + i);
  }
  f.value = Eigen::MatrixXd::Zero(n, B);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const int r = L.bid_row(i, j);
      f.value.row(i).array() += f.outcome.allocation.row(r).array() * inputs.row(r).array();
    }
  }
  f.outcome.payments = f.fraction.array() * f.value.array();
  return f;
}

BatchOutcome RegretNet::evaluate(const Eigen::MatrixXd& inputs) const {
  return run_forward(inputs, false).outcome;
}

std::pair<BatchOutcome, Eigen::MatrixXd> RegretNet::value_and_pullback(const Eigen::MatrixXd& inputs,
                                                                       const BatchOutcome& cot,
                                                                       MechanismGradient* param_grad) const {
  Forward f = run_forward(inputs, true);
  const Layout& L = params_.layout;
  const int n = L.bidders;
  const int m = L.items;
  const Eigen::Index B = inputs.cols();
  if (cot.allocation.rows() != L.bid_dim() || cot.allocation.cols() != B || cot.payments.rows() != n ||
      cot.payments.cols() != B) {
    throw ShapeError("outcome cotangent shape mismatch");
  }

  // payment_i = fraction_i * value_i
  const Eigen::MatrixXd d_fraction = cot.payments.array() * f.value.array();
  const Eigen::MatrixXd d_value = cot.payments.array() * f.fraction.array();
  const Eigen::MatrixXd d_pay_logits = d_fraction.array() * f.fraction.array() * (1.0 - f.fraction.array());

  Eigen::MatrixXd d_inputs = Eigen::MatrixXd::Zero(inputs.rows(), B);
  Eigen::MatrixXd d_full = Eigen::MatrixXd::Zero(f.full_alloc.rows(), B);  // dummy rows stay zero
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const int r = L.bid_row(i, j);
      d_full.row(j * (n + 1) + i) = cot.allocation.row(r).array() + d_value.row(i).array() * inputs.row(r).array();
      d_inputs.row(r) = d_value.row(i).array() * f.outcome.allocation.row(r).array();
    }
  }
  Eigen::MatrixXd d_logits(f.full_alloc.rows(), B);
  for (int j = 0; j < m; ++j) {
    auto a = f.full_alloc.middleRows(j * (n + 1), n + 1);
    auto da = d_full.middleRows(j * (n + 1), n + 1);
    Eigen::RowVectorXd inner = (a.array() * da.array()).colwise().sum();
    d_logits.middleRows(j * (n + 1), n + 1) = a.array() * (da.rowwise() - inner).array();
  }

  d_inputs += params_.alloc_net.backward_batch(f.alloc_tape, d_logits, param_grad ? &param_grad->alloc : nullptr,
                                               true);
  d_inputs += params_.pay_net.backward_batch(f.pay_tape, d_pay_logits, param_grad ? &param_grad->pay : nullptr,
                                             true);
  return {std::move(f.outcome), std::move(d_inputs)};
}

void save_params(std::ostream& out, const MechanismParams& params) {
  const Layout& L = params.layout;
  out << "regretnet 1\n";
  out << "layout " << L.bidders << ' ' << L.items << ' ' << L.bidder_context_dim << ' ' << L.item_context_dim
      << '\n';
  params.alloc_net.save(out);
  params.pay_net.save(out);
}

MechanismParams load_params(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "regretnet" || version != 1) {
    throw ShapeError("not a regretnet v1 checkpoint");
  }
  MechanismParams p;
  if (!(in >> tag >> p.layout.bidders >> p.layout.items >> p.layout.bidder_context_dim >>
        p.layout.item_context_dim) ||
      tag != "layout") {
    throw ShapeError("checkpoint: bad layout line");
  }
  p.alloc_net = diffnet::DenseNet::load(in);
  p.pay_net = diffnet::DenseNet::load(in);
  p.validate();
  return p;
}

}  // namespace peauction
