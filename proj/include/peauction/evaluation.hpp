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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "peauction/equivariance.hpp"
#include "peauction/mechanism.hpp"
#include "peauction/regret.hpp"
#include "peauction/training.hpp"

namespace peauction {

struct EvalConfig {
  MisreportConfig misreport = default_misreport();
  /// Regret measured on the training data; enables the generalization error.
  std::optional<double> train_regret;

  /// 100 restarts x 200 Adam steps.
  static MisreportConfig default_misreport();
};

struct Metrics {
  double revenue = 0.0;
  double revenue_se = 0.0;
  double regret_mean = 0.0;
  double regret_se = 0.0;
  Eigen::VectorXd regret_per_bidder;
  std::optional<double> train_regret;
  std::optional<double> ge;  // |regret_test - regret_train|
  nlohmann::json config;     // misreport budget, test size, projection
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static Metrics from_json(const nlohmann::json& j);
};

/// Revenue on truthful bids and regret under `cfg.misreport`.
Metrics evaluate(const Mechanism& mech, const Eigen::MatrixXd& test_inputs, const EvalConfig& cfg);

/// Evaluation-time projection of a trained mechanism (no retraining).
std::shared_ptr<ProjectedMechanism> project_for_test(MechanismPtr trained, const ProjectionSpec& spec);
std::shared_ptr<ProjectedMechanism> project_for_test(const Model& model, const ProjectionSpec& spec);

enum class GridSetting { two_by_one, one_by_two };

GridSetting parse_grid_setting(const std::string& name);
std::string grid_setting_name(GridSetting setting);

/// Allocation probabilities over a (v1, v2) lattice with `resolution` points
/// per axis on [0, 1], v1 outer. 2x1: v1, v2 are the two bidders' values and
/// the probabilities are per bidder. 1x2: v1, v2 are the single bidder's item
/// values and the probabilities are per item.
struct AllocationGrid {
  GridSetting setting = GridSetting::two_by_one;
  int resolution = 0;
  Eigen::MatrixXd rows;  // resolution^2 x 4: v1, v2, prob1, prob2
};

AllocationGrid export_allocation_grid(const Mechanism& mech, GridSetting setting, int resolution);
void write_grid_csv(std::ostream& out, const AllocationGrid& grid);

}  // namespace peauction
