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

#include "peauction/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "peauction/errors.hpp"

namespace peauction {

MisreportConfig EvalConfig::default_misreport() {
  MisreportConfig m;
  m.steps = 200;
  m.num_inits = 100;
  m.learning_rate = 0.1;
  return m;
}

nlohmann::json Metrics::to_json() const {
  nlohmann::json j;
  j["revenue"] = revenue;
  j["revenue_se"] = revenue_se;
  j["regret_mean"] = regret_mean;
  j["regret_se"] = regret_se;
  j["regret_per_bidder"] = std::vector<double>(regret_per_bidder.data(), regret_per_bidder.data() + regret_per_bidder.size());
  j["ge"] = ge ? nlohmann::json(*ge) : nlohmann::json(nullptr);
  j["train_regret"] = train_regret ? nlohmann::json(*train_regret) : nlohmann::json(nullptr);
  j["config"] = config;
  return j;
}

Metrics Metrics::from_json(const nlohmann::json& j) {
  Metrics m;
  m.revenue = j.at("revenue").get<double>();
  m.revenue_se = j.at("revenue_se").get<double>();
  m.regret_mean = j.at("regret_mean").get<double>();
  m.regret_se = j.at("regret_se").get<double>();
  const auto per = j.at("regret_per_bidder").get<std::vector<double>>();
  m.regret_per_bidder = Eigen::Map<const Eigen::VectorXd>(per.data(), static_cast<Eigen::Index>(per.size()));
  if (j.contains("ge") && !j["ge"].is_null()) m.ge = j["ge"].get<double>();
  if (j.contains("train_regret") && !j["train_regret"].is_null()) m.train_regret = j["train_regret"].get<double>();
  if (j.contains("config")) m.config = j["config"];
  return m;
}

Metrics evaluate(const Mechanism& mech, const Eigen::MatrixXd& test_inputs, const EvalConfig& cfg) {
  mech.check_inputs(test_inputs);
  const Eigen::Index B = test_inputs.cols();
  if (B == 0) throw ShapeError("evaluate: empty test batch");
  Metrics out;
  const BatchOutcome truthful = mech.evaluate(test_inputs);
  const Eigen::RowVectorXd revenue = truthful.payments.colwise().sum();
  out.revenue = revenue.mean();
  const double denom = B > 1 ? static_cast<double>(B - 1) : 1.0;
  out.revenue_se = std::sqrt((revenue.array() - out.revenue).square().sum() / denom / static_cast<double>(B));

  const RegretReport rep = empirical_regret(mech, test_inputs, cfg.misreport);
  out.regret_mean = rep.mean_regret;
  out.regret_se = rep.mean_regret_se;
  out.regret_per_bidder = rep.per_bidder_regret;
  out.train_regret = cfg.train_regret;
  if (cfg.train_regret) {
    out.ge = std::abs(out.regret_mean - *cfg.train_regret);
  } else {
    out.warnings.emplace_back("no training regret recorded; generalization error omitted");
  }

  const auto* projected = dynamic_cast<const ProjectedMechanism*>(&mech);
  const MisreportConfig& mc = cfg.misreport;
  out.config = {{"test_size", B},
                {"misreport_steps", mc.steps},
                {"misreport_inits", mc.num_inits},
                {"misreport_lr", mc.learning_rate},
                {"misreport_grid_levels", mc.grid_levels.size()},
                {"seed", mc.seed},
                {"bidders", mech.layout().bidders},
                {"items", mech.layout().items},
                {"projection", projected ? projected->spec().to_string() : "none"}};
  return out;
}

std::shared_ptr<ProjectedMechanism> project_for_test(MechanismPtr trained, const ProjectionSpec& spec) {
  if (!trained) throw ParameterError("project_for_test: null mechanism");
  spec.validate(trained->layout().bidders, trained->layout().items);
  return std::make_shared<ProjectedMechanism>(std::move(trained), spec);
}

std::shared_ptr<ProjectedMechanism> project_for_test(const Model& model, const ProjectionSpec& spec) {
  return project_for_test(model.mechanism(), spec);
}

GridSetting parse_grid_setting(const std::string& name) {
  if (name == "2x1") return GridSetting::two_by_one;
  if (name == "1x2") return GridSetting::one_by_two;
  throw ParameterError("unsupported grid setting '" + name + "' (expected 2x1 or 1x2)");
}

std::string grid_setting_name(GridSetting setting) {
  return setting == GridSetting::two_by_one ? "2x1" : "1x2";
}

AllocationGrid export_allocation_grid(const Mechanism& mech, GridSetting setting, int resolution) {
  const Layout& L = mech.layout();
  const bool two_by_one = setting == GridSetting::two_by_one;
  if (L.bidders != (two_by_one ? 2 : 1) || L.items != (two_by_one ? 1 : 2) || L.bidder_context_dim != 0 ||
      L.item_context_dim != 0) {
    throw ShapeError("export_allocation_grid: mechanism layout does not match setting " + grid_setting_name(setting));
  }
  if (resolution < 2) throw ParameterError("export_allocation_grid: resolution must be at least 2");
  const Eigen::Index count = static_cast<Eigen::Index>(resolution) * resolution;
  Eigen::MatrixXd inputs(2, count);
  for (int a = 0; a < resolution; ++a) {
    for (int b = 0; b < resolution; ++b) {
      const Eigen::Index r = static_cast<Eigen::Index>(a) * resolution + b;
      inputs(0, r) = static_cast<double>(a) / (resolution - 1);
      inputs(1, r) = static_cast<double>(b) / (resolution - 1);
    }
  }
  // Both layouts have two bid rows: bidder-major for 2x1, item-major for 1x2.
  const BatchOutcome out = mech.evaluate(inputs);
  AllocationGrid grid;
  grid.setting = setting;
  grid.resolution = resolution;
  grid.rows.resize(count, 4);
  grid.rows.col(0) = inputs.row(0).transpose();
  grid.rows.col(1) = inputs.row(1).transpose();
  grid.rows.col(2) = out.allocation.row(0).transpose();
  grid.rows.col(3) = out.allocation.row(1).transpose();
  return grid;
}

void write_grid_csv(std::ostream& out, const AllocationGrid& grid) {
  const bool two_by_one = grid.setting == GridSetting::two_by_one;
  out << (two_by_one ? "v1,v2,prob_bidder1,prob_bidder2\n" : "v1,v2,prob_item1,prob_item2\n");
  out << std::setprecision(12);
  for (Eigen::Index r = 0; r < grid.rows.rows(); ++r) {
    out << grid.rows(r, 0) << ',' << grid.rows(r, 1) << ',' << grid.rows(r, 2) << ',' << grid.rows(r, 3) << '\n';
  }
}

}  // namespace peauction
