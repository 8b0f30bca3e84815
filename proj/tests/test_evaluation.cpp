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

#include <doctest.h>

#include <sstream>

#include "peauction/errors.hpp"
#include "peauction/evaluation.hpp"
#include "peauction/myerson.hpp"
#include "peauction/valuations.hpp"
#include "test_util.hpp"

using namespace peauction;

namespace {

MisreportConfig grid_search(int levels) {
  MisreportConfig c;
  for (int k = 0; k < levels; ++k) c.grid_levels.push_back(k / static_cast<double>(levels - 1));
  return c;
}

}  // namespace

TEST_CASE("second price with the optimal reserve: revenue 5/12, no regret") {
  const myerson::SecondPriceMechanism sp(2, 0.5);
  const Eigen::MatrixXd test = to_inputs(sample_uniform(2, 1, 20000, 4));
  EvalConfig cfg;
  cfg.misreport = grid_search(101);
  cfg.train_regret = 0.01;
  const Metrics m = evaluate(sp, test, cfg);
  CHECK(std::abs(m.revenue - 5.0 / 12.0) < 3.0 * m.revenue_se);
  CHECK(m.revenue_se > 0.0);
  CHECK(m.regret_mean <= 1e-6);
  REQUIRE(m.ge.has_value());
  CHECK(*m.ge == doctest::Approx(0.01));
  CHECK(m.warnings.empty());
  CHECK(m.config["test_size"] == 20000);
  CHECK(m.config["projection"] == "none");
}

TEST_CASE("zero-weight RegretNet charges a sixth of the value") {
  const RegretNet net(MechanismParams::zeros({2, 1, 0, 0}, {4, 1}));
  const Eigen::MatrixXd test = to_inputs(sample_uniform(2, 1, 500, 5));
  EvalConfig cfg;
  cfg.misreport.steps = 50;
  cfg.misreport.num_inits = 2;
  const Metrics m = evaluate(net, test, cfg);
  CHECK(m.revenue == doctest::Approx(test.sum() / 6.0 / 500.0));
  CHECK(m.regret_mean == doctest::Approx(test.sum() / 6.0 / 1000.0));
  CHECK_FALSE(m.ge.has_value());
  CHECK(m.warnings.size() == 1);
}

TEST_CASE("metrics JSON round trip") {
  Metrics m;
  m.revenue = 0.4;
  m.revenue_se = 0.01;
  m.regret_mean = 2e-4;
  m.regret_per_bidder = Eigen::Vector2d(1e-4, 3e-4);
  m.ge = 5e-5;
  m.config = {{"test_size", 10}};
  const Metrics back = Metrics::from_json(m.to_json());
  CHECK(back.revenue == m.revenue);
  CHECK(back.regret_per_bidder == m.regret_per_bidder);
  CHECK(back.ge == m.ge);
  CHECK_FALSE(back.train_regret.has_value());
  CHECK(m.to_json()["train_regret"].is_null());
  CHECK(back.config["test_size"] == 10);
}

TEST_CASE("test-time projection keeps revenue and does not raise regret on a symmetrized batch") {
  std::mt19937_64 rng(6);
  const Model model{MechanismParams::random({2, 1, 0, 0}, {12, 2}, rng), std::nullopt};
  const Eigen::MatrixXd test = to_inputs(symmetrize(sample_uniform(2, 1, 200, 7)));
  EvalConfig cfg;
  cfg.misreport = grid_search(51);
  const Metrics base = evaluate(*model.mechanism(), test, cfg);
  const auto projected = project_for_test(model, ProjectionSpec::bidder());
  const Metrics proj = evaluate(*projected, test, cfg);
  CHECK(std::abs(base.revenue - proj.revenue) < 1e-12);
  CHECK(proj.regret_mean <= base.regret_mean + 1e-12);
  CHECK(proj.config["projection"] == "bidder");
  CHECK_THROWS_AS(project_for_test(model, ProjectionSpec::subgroup({0, 2}, {})), ParameterError);
  CHECK_THROWS_AS(project_for_test(MechanismPtr{}, ProjectionSpec::bidder()), ParameterError);
}

TEST_CASE("projecting an equivariant model again changes nothing") {
  std::mt19937_64 rng(8);
  const Model pe{MechanismParams::random({3, 1, 0, 0}, {8, 2}, rng), ProjectionSpec::bidder()};
  const auto again = project_for_test(pe, ProjectionSpec::bidder());
  const Eigen::MatrixXd x = testutil::uniform_matrix(3, 50, rng);
  const BatchOutcome a = pe.mechanism()->evaluate(x);
  const BatchOutcome b = again->evaluate(x);
  CHECK((a.allocation - b.allocation).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((a.payments - b.payments).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("allocation grid export") {
  const myerson::SecondPriceMechanism sp(2, 0.5);
  const AllocationGrid g = export_allocation_grid(sp, GridSetting::two_by_one, 11);
  REQUIRE(g.rows.rows() == 121);
  CHECK(g.rows(1, 0) == 0.0);
  CHECK(g.rows(1, 1) == doctest::Approx(0.1));
  CHECK(g.rows(11, 0) == doctest::Approx(0.1));
  for (Eigen::Index r = 0; r < g.rows.rows(); ++r) {
    const double a = g.rows(r, 0), b = g.rows(r, 1);
    CHECK(g.rows(r, 2) == (a >= b && a >= 0.5 ? 1.0 : 0.0));
    CHECK(g.rows(r, 3) == (b > a && b >= 0.5 ? 1.0 : 0.0));
  }
  std::stringstream csv;
  write_grid_csv(csv, g);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "v1,v2,prob_bidder1,prob_bidder2");

  std::mt19937_64 rng(2);
  const auto net = std::make_shared<RegretNet>(MechanismParams::random({2, 1, 0, 0}, {8, 2}, rng));
  const AllocationGrid sym = export_allocation_grid(*project(net, ProjectionSpec::bidder()), GridSetting::two_by_one, 9);
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) CHECK(std::abs(sym.rows(a * 9 + b, 2) - sym.rows(b * 9 + a, 3)) < 1e-14);
  }

  const RegretNet wide(MechanismParams::random({1, 2, 0, 0}, {8, 2}, rng));
  const AllocationGrid items = export_allocation_grid(wide, parse_grid_setting("1x2"), 5);
  CHECK(items.rows.rows() == 25);
  std::stringstream csv2;
  write_grid_csv(csv2, items);
  std::getline(csv2, header);
  CHECK(header == "v1,v2,prob_item1,prob_item2");
  CHECK(grid_setting_name(items.setting) == "1x2");
  CHECK_THROWS_AS(export_allocation_grid(wide, GridSetting::two_by_one, 5), ShapeError);
  CHECK_THROWS_AS(export_allocation_grid(sp, GridSetting::two_by_one, 1), ParameterError);
  CHECK_THROWS_AS(parse_grid_setting("3x1"), ParameterError);
}
