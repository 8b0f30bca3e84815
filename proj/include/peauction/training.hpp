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
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "peauction/diffnet/adam.hpp"
#include "peauction/equivariance.hpp"
#include "peauction/mechanism.hpp"
#include "peauction/regret.hpp"

namespace peauction {

/// rho_t = initial + increment * floor(t / period).
struct RhoSchedule {
  double initial = 1.0;
  double increment = 5.0;
  int period = 200;

  double at(long iteration) const;
};

struct TrainConfig {
  ArchitectureConfig arch;
  int batch_size = 128;
  long total_iterations = 10'000;
  int misreport_steps = 25;
  double misreport_lr = 0.1;
  double learning_rate = 1e-3;
  int lambda_period = 200;
  double lambda_init = 5.0;
  RhoSchedule rho;
  std::optional<ProjectionSpec> projection;
  /// Stop once validation regret drops below this; 0 disables the check.
  double early_stop_regret = 0.0;
  /// Misreport steps for the validation measurement (warm-started).
  int validation_steps = 100;
  /// Passes over the training data before the source is exhausted; 0 = unlimited.
  int max_epochs = 0;
  int log_interval = 100;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

/// -mean_l sum_i p_i + lambda . reg + (rho/2) (sum_i reg_i)^2.
/// `payments` is n x L (one column per profile).
double lagrangian_loss(const Eigen::MatrixXd& payments, const Eigen::VectorXd& regrets,
                       const Eigen::VectorXd& lambda, double rho);

struct HistoryRow {
  long iteration = 0;
  double revenue = 0.0;
  double regret = 0.0;
  double loss = 0.0;
  double rho = 0.0;
  double lambda_norm = 0.0;
};

void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& rows, bool header = true);

/// Trained weights plus the projection applied at every forward pass, if any.
struct Model {
  MechanismParams params;
  std::optional<ProjectionSpec> projection;

  /// The mechanism the model denotes: RegretNet, wrapped when projected.
  MechanismPtr mechanism() const;
};

/// Model checkpoint: "peauction-model 1", a projection line, then the params.
void save_model(std::ostream& out, const Model& model);
Model load_model(std::istream& in);
void save_model_file(const std::string& path, const Model& model);
Model load_model_file(const std::string& path);

struct TrainState {
  MechanismParams params;
  Eigen::VectorXd lambda;
  double rho = 0.0;
  long iteration = 0;
  diffnet::NetAdam alloc_adam;
  diffnet::NetAdam pay_adam;
  MisreportStore store;
  std::vector<HistoryRow> history;
  /// Per-bidder training regret measured at the last lambda update.
  Eigen::VectorXd last_regret;
  double last_validation_regret = -1.0;
  bool early_stopped = false;

  Model model(const std::optional<ProjectionSpec>& projection) const { return {params, projection}; }
};

/// Called after every lambda update with the state at that point.
using CheckpointFn = std::function<void(const TrainState&)>;

/// Components of one Lagrangian evaluation on a batch, recomputable from the
/// mechanism and the misreports alone.
struct LossParts {
  Eigen::MatrixXd payments;  // n x B, truthful
  /// n, batch mean of u(misreport) - u(truth), not clamped.
  Eigen::VectorXd regrets;
  double loss = 0.0;
};

LossParts loss_parts(const Mechanism& mech, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& misreports,
                     const Eigen::VectorXd& lambda, double rho);

/// Augmented Lagrangian trainer. Training data is D x N, one profile per
/// column; batches are drawn from a per-epoch shuffle. The validation slice
/// is only used for early stopping.
class Trainer {
 public:
  Trainer(Layout layout, TrainConfig cfg, Eigen::MatrixXd train_inputs, Eigen::MatrixXd validation_inputs = {});

  /// Runs until total_iterations or early stop. Throws NumericError on a
  /// non-finite loss or gradient and DataError once max_epochs are used up.
  const TrainState& run(const CheckpointFn& on_checkpoint = {});

  /// One iteration; returns the loss before the parameter step.
  double step();

  const TrainState& state() const { return state_; }
  const TrainConfig& config() const { return cfg_; }
  /// Current mechanism (projected when the config says so).
  MechanismPtr mechanism() const { return mech_; }
  Model model() const { return state_.model(cfg_.projection); }

 private:
  void next_batch(Eigen::MatrixXd& batch, std::vector<std::size_t>& indices);
  void update_lambda(const Eigen::MatrixXd& batch, const Eigen::MatrixXd& misreports);
  double validation_regret();

  Layout layout_;
  TrainConfig cfg_;
  Eigen::MatrixXd train_;
  Eigen::MatrixXd validation_;
  TrainState state_;
  std::shared_ptr<RegretNet> net_;
  MechanismPtr mech_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  int epoch_ = 0;
  MisreportStore validation_store_;
};

}  // namespace peauction
