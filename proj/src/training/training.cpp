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

#include "peauction/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "peauction/errors.hpp"

namespace peauction {

double RhoSchedule::at(long iteration) const {
  return initial + increment * static_cast<double>(iteration / period);
}

void TrainConfig::validate() const {
  if (batch_size <= 0 || total_iterations <= 0 || misreport_steps < 0 || lambda_period <= 0 || rho.period <= 0 ||
      log_interval <= 0 || validation_steps < 0 || max_epochs < 0 || workers <= 0) {
    throw ParameterError("train config: counts must be positive");
  }
  if (!(misreport_lr > 0.0) || !(learning_rate > 0.0)) throw ParameterError("train config: learning rates must be positive");
  if (!(rho.initial > 0.0) || rho.increment < 0.0) throw ParameterError("train config: rho must start positive and not decrease");
  if (early_stop_regret < 0.0) throw ParameterError("train config: early_stop_regret must be >= 0");
  if (arch.hidden_width <= 0 || arch.hidden_layers < 0) throw ParameterError("train config: bad architecture");
}

double lagrangian_loss(const Eigen::MatrixXd& payments, const Eigen::VectorXd& regrets,
                       const Eigen::VectorXd& lambda, double rho) {
  if (regrets.size() != payments.rows() || lambda.size() != payments.rows()) {
    throw ShapeError("lagrangian_loss: lambda and regrets need one entry per bidder");
  }
  if (payments.cols() == 0) throw ShapeError("lagrangian_loss: empty batch");
  const double total = regrets.sum();
  return -payments.sum() / static_cast<double>(payments.cols()) + lambda.dot(regrets) + 0.5 * rho * total * total;
}

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows, bool header) {
  if (header) out << "iteration,revenue,regret,loss,rho,lambda_norm\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.iteration << ',' << r.revenue << ',' << r.regret << ',' << r.loss << ',' << r.rho << ','
        << r.lambda_norm << '\n';
  }
}

MechanismPtr Model::mechanism() const {
  auto net = std::make_shared<RegretNet>(params);
  if (!projection) return net;
  return std::make_shared<ProjectedMechanism>(net, *projection);
}

void save_model(std::ostream& out, const Model& model) {
  out << "peauction-model 1\n";
  out << "projection " << (model.projection ? model.projection->to_string() : "none") << '\n';
  save_params(out, model.params);
}

Model load_model(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "peauction-model" || version != 1) {
    throw ParameterError("not a peauction model checkpoint");
  }
  std::string key;
  std::string value;
  if (!(in >> key >> value) || key != "projection") throw ParameterError("model checkpoint: missing projection line");
  Model model;
  model.params = load_params(in);
  if (value != "none") {
    model.projection = ProjectionSpec::from_string(value);
    model.projection->validate(model.params.layout.bidders, model.params.layout.items);
  }
  return model;
}

void save_model_file(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path);
  save_model(out, model);
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read " + path);
  return load_model(in);
}

LossParts loss_parts(const Mechanism& mech, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& misreports,
                     const Eigen::VectorXd& lambda, double rho) {
  const Layout& L = mech.layout();
  const Eigen::Index B = inputs.cols();
  const BatchOutcome truthful = mech.evaluate(inputs);
  const Eigen::MatrixXd u_true = utilities(L, truthful, inputs);
  const Eigen::MatrixXd u_mis = misreport_utilities(mech, inputs, misreports);
  LossParts parts;
  parts.payments = truthful.payments;
  const Eigen::MatrixXd raw = u_mis - u_true;
  parts.regrets = raw.rowwise().sum() / static_cast<double>(B);
  parts.loss = lagrangian_loss(parts.payments, parts.regrets, lambda, rho);
  return parts;
}

Trainer::Trainer(Layout layout, TrainConfig cfg, Eigen::MatrixXd train_inputs, Eigen::MatrixXd validation_inputs)
    : layout_(layout), cfg_(std::move(cfg)), train_(std::move(train_inputs)), validation_(std::move(validation_inputs)) {
  cfg_.validate();
  if (train_.rows() != layout_.input_dim()) throw ShapeError("training data rows must equal the input dimension");
  if (train_.cols() < cfg_.batch_size) throw DataError("training data smaller than one batch");
  if (validation_.size() > 0 && validation_.rows() != layout_.input_dim()) {
    throw ShapeError("validation data rows must equal the input dimension");
  }
  if (cfg_.projection) cfg_.projection->validate(layout_.bidders, layout_.items);
  std::mt19937_64 rng(cfg_.seed);
  net_ = std::make_shared<RegretNet>(MechanismParams::random(layout_, cfg_.arch, rng));
  mech_ = cfg_.projection ? MechanismPtr(std::make_shared<ProjectedMechanism>(net_, *cfg_.projection)) : MechanismPtr(net_);
  const diffnet::AdamConfig adam{cfg_.learning_rate, 0.9, 0.999, 1e-8};
  state_.params = net_->params();
  state_.alloc_adam = diffnet::NetAdam(net_->params().alloc_net, adam);
  state_.pay_adam = diffnet::NetAdam(net_->params().pay_net, adam);
  state_.lambda = Eigen::VectorXd::Constant(layout_.bidders, cfg_.lambda_init);
  state_.rho = cfg_.rho.at(0);
  state_.store = MisreportStore(static_cast<std::size_t>(train_.cols()), layout_);
  state_.last_regret = Eigen::VectorXd::Zero(layout_.bidders);
  if (validation_.cols() > 0) validation_store_ = MisreportStore(static_cast<std::size_t>(validation_.cols()), layout_);
  order_.resize(static_cast<std::size_t>(train_.cols()));
  std::iota(order_.begin(), order_.end(), std::size_t{0});
}

void Trainer::next_batch(Eigen::MatrixXd& batch, std::vector<std::size_t>& indices) {
  const auto B = static_cast<std::size_t>(cfg_.batch_size);
  if (epoch_ == 0 || cursor_ + B > order_.size()) {
    if (cfg_.max_epochs > 0 && epoch_ >= cfg_.max_epochs) throw DataError("training data exhausted");
    std::mt19937_64 rng(cfg_.seed ^ (0x5851F42D4C957F2DULL * static_cast<std::uint64_t>(epoch_ + 1)));
    std::shuffle(order_.begin(), order_.end(), rng);
    ++epoch_;
    cursor_ = 0;
  }
  indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + B));
  cursor_ += B;
  batch.resize(train_.rows(), static_cast<Eigen::Index>(B));
  for (std::size_t c = 0; c < B; ++c) batch.col(static_cast<Eigen::Index>(c)) = train_.col(static_cast<Eigen::Index>(indices[c]));
}

double Trainer::step() {
  const Layout& L = layout_;
  const int n = L.bidders;
  const int m = L.items;
  const long t = state_.iteration;
  state_.rho = cfg_.rho.at(t);
  Eigen::MatrixXd batch;
  std::vector<std::size_t> indices;
  next_batch(batch, indices);
  const Eigen::Index B = batch.cols();

  MisreportConfig mcfg;
  mcfg.steps = cfg_.misreport_steps;
  mcfg.learning_rate = cfg_.misreport_lr;
  mcfg.num_inits = 1;
  mcfg.warm_start = true;
  mcfg.seed = cfg_.seed;
  mcfg.workers = cfg_.workers;
  const MisreportSearch search = search_misreports(*mech_, batch, mcfg, &state_.store, indices);
  const Eigen::MatrixXd mis_inputs = misreport_inputs(L, batch, search.misreports);

  // Forward passes with the misreports held fixed.
  const BatchOutcome truthful = mech_->evaluate(batch);
  const BatchOutcome misreported = mech_->evaluate(mis_inputs);
  const Eigen::MatrixXd u_true = utilities(L, truthful, batch);
  Eigen::MatrixXd u_mis(n, B);
  for (Eigen::Index c = 0; c < B; ++c) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index col = c * n + i;
      double u = -misreported.payments(i, col);
      for (int j = 0; j < m; ++j) u += misreported.allocation(L.bid_row(i, j), col) * batch(L.bid_row(i, j), c);
      u_mis(i, c) = u;
    }
  }
  const Eigen::MatrixXd raw = u_mis - u_true;
  const Eigen::VectorXd regrets = raw.rowwise().sum() / static_cast<double>(B);
  const double loss = lagrangian_loss(truthful.payments, regrets, state_.lambda, state_.rho);
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite loss at iteration " << t << " (rho " << state_.rho << ")";
    throw NumericError(msg.str());
  }

  // dL/dreg_i = lambda_i + rho * sum reg; every (sample, bidder) pair
  // contributes through both the truthful and the misreported outcome.
  const Eigen::VectorXd coef = (state_.lambda.array() + state_.rho * regrets.sum()).matrix();
  const double invB = 1.0 / static_cast<double>(B);
  BatchOutcome cot_true = BatchOutcome::zeros(L, B);
  BatchOutcome cot_mis = BatchOutcome::zeros(L, B * n);
  for (Eigen::Index c = 0; c < B; ++c) {
    for (int i = 0; i < n; ++i) {
      const double w = coef(i) * invB;
      const Eigen::Index col = c * n + i;
      cot_true.payments(i, c) = w - invB;
      cot_mis.payments(i, col) = -w;
      for (int j = 0; j < m; ++j) {
        const double v = batch(L.bid_row(i, j), c);
        cot_true.allocation(L.bid_row(i, j), c) = -w * v;
        cot_mis.allocation(L.bid_row(i, j), col) = w * v;
      }
    }
  }
  MechanismGradient grad = net_->params().zero_gradient();
  mech_->value_and_pullback(batch, cot_true, &grad);
  mech_->value_and_pullback(mis_inputs, cot_mis, &grad);
  if (!grad.alloc.all_finite() || !grad.pay.all_finite()) {
    throw NumericError("non-finite gradient at iteration " + std::to_string(t));
  }
  MechanismParams& params = net_->mutable_params();
  state_.alloc_adam.step(params.alloc_net, grad.alloc);
  state_.pay_adam.step(params.pay_net, grad.pay);
  state_.params = params;
  state_.iteration = t + 1;

  if (state_.iteration % cfg_.log_interval == 0 || state_.iteration == 1) {
    HistoryRow row;
    row.iteration = state_.iteration;
    row.revenue = truthful.payments.sum() * invB;
    row.regret = regrets.mean();
    row.loss = loss;
    row.rho = state_.rho;
    row.lambda_norm = state_.lambda.norm();
    state_.history.push_back(row);
  }
  if (state_.iteration % cfg_.lambda_period == 0) update_lambda(batch, search.misreports);
  return loss;
}

void Trainer::update_lambda(const Eigen::MatrixXd& batch, const Eigen::MatrixXd& misreports) {
  // Regret at the updated parameters, against the misreports just found.
  const LossParts parts = loss_parts(*mech_, batch, misreports, state_.lambda, state_.rho);
  state_.last_regret = parts.regrets;
  state_.lambda += state_.rho * parts.regrets;
  if (cfg_.early_stop_regret > 0.0 && validation_.cols() > 0) {
    state_.last_validation_regret = validation_regret();
    if (state_.last_validation_regret < cfg_.early_stop_regret) state_.early_stopped = true;
  }
}

double Trainer::validation_regret() {
  MisreportConfig mcfg;
  mcfg.steps = cfg_.validation_steps;
  mcfg.learning_rate = cfg_.misreport_lr;
  mcfg.warm_start = true;
  mcfg.seed = cfg_.seed + 1;
  mcfg.workers = cfg_.workers;
  return empirical_regret(*mech_, validation_, mcfg, &validation_store_).mean_regret;
}

const TrainState& Trainer::run(const CheckpointFn& on_checkpoint) {
  while (state_.iteration < cfg_.total_iterations && !state_.early_stopped) {
    step();
    if (on_checkpoint && state_.iteration % cfg_.lambda_period == 0) on_checkpoint(state_);
  }
  return state_;
}

}  // namespace peauction
