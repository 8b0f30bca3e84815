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

#include "peauction/theoremlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "peauction/errors.hpp"

namespace peauction::theoremlab {

std::size_t Grid::profile_count() const {
  if (levels.empty()) throw ParameterError("grid needs at least one level");
  std::size_t count = 1;
  for (int e = 0; e < layout.bid_dim(); ++e) {
    if (count > kEnumerationBudget / levels.size()) {
      throw BudgetError("grid has more than " + std::to_string(kEnumerationBudget) + " profiles");
    }
    count *= levels.size();
  }
  return count;
}

Eigen::MatrixXd Grid::all_profiles() const {
  const std::size_t P = profile_count();
  const int d = layout.bid_dim();
  Eigen::MatrixXd out(d, static_cast<Eigen::Index>(P));
  for (std::size_t p = 0; p < P; ++p) {
    std::size_t rest = p;
    for (int e = d - 1; e >= 0; --e) {
      out(e, static_cast<Eigen::Index>(p)) = levels[rest % levels.size()];
      rest /= levels.size();
    }
  }
  return out;
}

std::size_t Grid::index_of(const Eigen::Ref<const Eigen::VectorXd>& bids) const {
  std::size_t idx = 0;
  for (int e = 0; e < layout.bid_dim(); ++e) {
    std::size_t level = levels.size();
    for (std::size_t k = 0; k < levels.size(); ++k) {
      if (std::abs(bids(e) - levels[k]) <= 1e-9) {
        level = k;
        break;
      }
    }
    if (level == levels.size()) throw ParameterError("bid is not a grid level");
    idx = idx * levels.size() + level;
  }
  return idx;
}

GridMechanism::GridMechanism(Grid grid, Eigen::MatrixXd alloc_table, Eigen::MatrixXd pay_table)
    : grid_(std::move(grid)), alloc_(std::move(alloc_table)), pay_(std::move(pay_table)) {
  if (grid_.layout.bidder_context_dim != 0 || grid_.layout.item_context_dim != 0) {
    throw ParameterError("grid mechanisms take bids only");
  }
  const auto P = static_cast<Eigen::Index>(grid_.profile_count());
  if (alloc_.rows() != grid_.layout.bid_dim() || alloc_.cols() != P || pay_.rows() != grid_.layout.bidders ||
      pay_.cols() != P) {
    throw ShapeError("grid mechanism tables do not match the grid");
  }
}

GridMechanism GridMechanism::random(const Grid& grid, std::mt19937_64& rng) {
  const Layout& L = grid.layout;
  const Eigen::MatrixXd profiles = grid.all_profiles();
  const Eigen::Index P = profiles.cols();
  Eigen::MatrixXd alloc(L.bid_dim(), P);
  Eigen::MatrixXd pay(L.bidders, P);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  std::vector<double> w(static_cast<std::size_t>(L.bidders + 1));
  for (Eigen::Index p = 0; p < P; ++p) {
    for (int j = 0; j < L.items; ++j) {
      double total = 0.0;
      for (auto& x : w) total += (x = expo(rng));
      for (int i = 0; i < L.bidders; ++i) alloc(L.bid_row(i, j), p) = w[static_cast<std::size_t>(i)] / total;
    }
    for (int i = 0; i < L.bidders; ++i) {
      double value = 0.0;
      for (int j = 0; j < L.items; ++j) value += alloc(L.bid_row(i, j), p) * profiles(L.bid_row(i, j), p);
      pay(i, p) = frac(rng) * value;
    }
  }
  return {grid, std::move(alloc), std::move(pay)};
}

GridMechanism GridMechanism::tabulate(const Grid& grid, const Mechanism& mech) {
  if (!(mech.layout() == grid.layout)) throw ShapeError("tabulate: layout mismatch");
  BatchOutcome out = mech.evaluate(grid.all_profiles());
  return {grid, std::move(out.allocation), std::move(out.payments)};
}

BatchOutcome GridMechanism::evaluate(const Eigen::MatrixXd& inputs) const {
  check_inputs(inputs);
  BatchOutcome out = BatchOutcome::zeros(grid_.layout, inputs.cols());
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    const auto p = static_cast<Eigen::Index>(grid_.index_of(inputs.col(c)));
    out.allocation.col(c) = alloc_.col(p);
    out.payments.col(c) = pay_.col(p);
  }
  return out;
}

double exact_revenue(const Mechanism& mech, const Grid& grid) {
  const BatchOutcome out = mech.evaluate(grid.all_profiles());
  return out.payments.sum() / static_cast<double>(out.payments.cols());
}

ExactUtilities exact_utilities(const Mechanism& mech, const Grid& grid) {
  const Layout& L = grid.layout;
  const int n = L.bidders;
  const int m = L.items;
  const Eigen::MatrixXd values = grid.all_profiles();
  const Eigen::Index P = values.cols();
  ExactUtilities res;
  res.truthful = utilities(L, mech.evaluate(values), values);
  res.best = Eigen::MatrixXd::Constant(n, P, -std::numeric_limits<double>::infinity());
  const std::size_t base = grid.levels.size();
  std::size_t combos = 1;
  for (int j = 0; j < m; ++j) combos *= base;
  for (int i = 0; i < n; ++i) {
    for (std::size_t combo = 0; combo < combos; ++combo) {
      Eigen::MatrixXd bids = values;
      std::size_t rest = combo;
      for (int j = m - 1; j >= 0; --j) {
        bids.row(L.bid_row(i, j)).setConstant(grid.levels[rest % base]);
        rest /= base;
      }
      const Eigen::MatrixXd u = utilities(L, mech.evaluate(bids), values);
      res.best.row(i) = res.best.row(i).cwiseMax(u.row(i));
    }
  }
  return res;
}

MechanismPtr make_projection(MechanismPtr base, const ProjectionSpec& spec, const VerifyOptions& opts) {
  ProjectedMechanism::Options o;
  o.skip_term = opts.skip_term;
  return std::make_shared<ProjectedMechanism>(std::move(base), spec, o);
}

double verify_revenue_invariance(MechanismPtr mech, const Grid& grid, const ProjectionSpec& spec,
                                 const VerifyOptions& opts) {
  const auto proj = make_projection(mech, spec, opts);
  return std::abs(exact_revenue(*proj, grid) - exact_revenue(*mech, grid));
}

Eigen::VectorXd regret_gap_per_profile(MechanismPtr mech, const Grid& grid, const ProjectionSpec& spec,
                                       const VerifyOptions& opts) {
  const auto proj = make_projection(mech, spec, opts);
  const ExactUtilities base = exact_utilities(*mech, grid);
  const ExactUtilities projected = exact_utilities(*proj, grid);
  return (base.best.colwise().sum() - projected.best.colwise().sum()).transpose();
}

RegretGapResult verify_regret_gap(MechanismPtr mech, const Grid& grid, const ProjectionSpec& spec,
                                  const VerifyOptions& opts) {
  const auto proj = make_projection(mech, spec, opts);
  const ExactUtilities base = exact_utilities(*mech, grid);
  const ExactUtilities projected = exact_utilities(*proj, grid);
  const auto P = static_cast<double>(base.best.cols());
  RegretGapResult r;
  r.regret_difference = (base.regret().sum() - projected.regret().sum()) / P;
  r.expected_gap = (base.best.sum() - projected.best.sum()) / P;
  return r;
}

namespace {

double max_outcome_gap(const BatchOutcome& a, const BatchOutcome& b) {
  return std::max((a.allocation - b.allocation).cwiseAbs().maxCoeff(),
                  (a.payments - b.payments).cwiseAbs().maxCoeff());
}

}  // namespace

double verify_composition(MechanismPtr mech, const Grid& grid, const VerifyOptions& opts) {
  const Eigen::MatrixXd profiles = grid.all_profiles();
  const auto q3 = make_projection(mech, ProjectionSpec::aggregated(), opts);
  const auto q1q2 = make_projection(make_projection(mech, ProjectionSpec::item(), opts), ProjectionSpec::bidder(), opts);
  const auto q2q1 = make_projection(make_projection(mech, ProjectionSpec::bidder(), opts), ProjectionSpec::item(), opts);
  const BatchOutcome o3 = q3->evaluate(profiles);
  const BatchOutcome o12 = q1q2->evaluate(profiles);
  const BatchOutcome o21 = q2q1->evaluate(profiles);
  return std::max({max_outcome_gap(o3, o12), max_outcome_gap(o3, o21), max_outcome_gap(o12, o21)});
}

double verify_gap_decomposition(MechanismPtr mech, const Grid& grid, const VerifyOptions& opts) {
  const Eigen::VectorXd d3 = regret_gap_per_profile(mech, grid, ProjectionSpec::aggregated(), opts);
  const Eigen::VectorXd d1 = regret_gap_per_profile(mech, grid, ProjectionSpec::bidder(), opts);
  const auto q1 = make_projection(mech, ProjectionSpec::bidder(), opts);
  const Eigen::VectorXd d2 = regret_gap_per_profile(q1, grid, ProjectionSpec::item(), opts);
  return (d3 - d1 - d2).cwiseAbs().maxCoeff();
}

double verify_idempotence(MechanismPtr mech, const Grid& grid, const ProjectionSpec& spec, const VerifyOptions& opts) {
  const Eigen::MatrixXd profiles = grid.all_profiles();
  const auto once = make_projection(mech, spec, opts);
  const auto twice = make_projection(once, spec, opts);
  return max_outcome_gap(once->evaluate(profiles), twice->evaluate(profiles));
}

double payment_distance(const Mechanism& a, const Mechanism& b, const Grid& grid) {
  const Eigen::MatrixXd profiles = grid.all_profiles();
  const BatchOutcome oa = a.evaluate(profiles);
  const BatchOutcome ob = b.evaluate(profiles);
  return (oa.payments - ob.payments).cwiseAbs().colwise().sum().maxCoeff();
}

double utility_distance(const Mechanism& a, const Mechanism& b, const Grid& grid) {
  const Layout& L = grid.layout;
  const Eigen::MatrixXd profiles = grid.all_profiles();
  const BatchOutcome oa = a.evaluate(profiles);
  const BatchOutcome ob = b.evaluate(profiles);
  const Eigen::MatrixXd dg = oa.allocation - ob.allocation;  // per bid profile
  const Eigen::MatrixXd dp = oa.payments - ob.payments;
  const Eigen::Index P = profiles.cols();
  double worst = 0.0;
  // u_i(v_i, b) = sum_j g_ij(b) v_ij - p_i(b), over every valuation v and bid b
  for (Eigen::Index v = 0; v < P; ++v) {
    for (Eigen::Index bcol = 0; bcol < P; ++bcol) {
      double total = 0.0;
      for (int i = 0; i < L.bidders; ++i) {
        double d = -dp(i, bcol);
        for (int j = 0; j < L.items; ++j) d += dg(L.bid_row(i, j), bcol) * profiles(L.bid_row(i, j), v);
        total += std::abs(d);
      }
      worst = std::max(worst, total);
    }
  }
  return worst;
}

DistanceResult verify_distance_contraction(MechanismPtr a, MechanismPtr b, const Grid& grid,
                                           const ProjectionSpec& spec, const VerifyOptions& opts) {
  const auto qa = make_projection(a, spec, opts);
  const auto qb = make_projection(b, spec, opts);
  return {payment_distance(*a, *b, grid), payment_distance(*qa, *qb, grid), utility_distance(*a, *b, grid),
          utility_distance(*qa, *qb, grid)};
}

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["seconds"] = seconds;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back(
        {{"name", c.name}, {"worst", c.worst}, {"tolerance", c.tolerance}, {"cases", c.cases}, {"passed", c.passed}});
  }
  return j;
}

SuiteReport run_suite(const SuiteConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const double tol = cfg.tolerance;
  CheckResult revenue{"revenue_invariance", 0.0, tol};
  CheckResult gap_identity{"regret_gap_identity", 0.0, tol};
  CheckResult gap_sign{"regret_gap_nonnegative", 0.0, tol};
  CheckResult composition{"composition_q3_q1q2_q2q1", 0.0, tol};
  CheckResult decomposition{"gap_decomposition_d3_d1_d2q1", 0.0, tol};
  CheckResult idempotence{"projection_idempotence", 0.0, tol};
  CheckResult contraction{"distance_contraction", 0.0, tol};
  const std::vector<ProjectionSpec> specs{ProjectionSpec::bidder(), ProjectionSpec::item(),
                                          ProjectionSpec::aggregated()};
  std::mt19937_64 rng(cfg.seed);
  const int span = std::max(1, cfg.max_levels - cfg.min_levels + 1);
  for (const auto& [n, m] : cfg.shapes) {
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const int count = cfg.min_levels + trial % span;
      Grid grid{{n, m, 0, 0}, {}};
      for (int k = 0; k < count; ++k) grid.levels.push_back(count == 1 ? 0.5 : static_cast<double>(k) / (count - 1));
      const auto mech = std::make_shared<GridMechanism>(GridMechanism::random(grid, rng));
      const auto other = std::make_shared<GridMechanism>(GridMechanism::random(grid, rng));
      for (const auto& spec : specs) {
        revenue.worst = std::max(revenue.worst, verify_revenue_invariance(mech, grid, spec, cfg.options));
        ++revenue.cases;
        const RegretGapResult g = verify_regret_gap(mech, grid, spec, cfg.options);
        gap_identity.worst = std::max(gap_identity.worst, std::abs(g.regret_difference - g.expected_gap));
        ++gap_identity.cases;
        gap_sign.worst = std::max(gap_sign.worst, -g.expected_gap);
        ++gap_sign.cases;
        idempotence.worst = std::max(idempotence.worst, verify_idempotence(mech, grid, spec, cfg.options));
        ++idempotence.cases;
        const DistanceResult d = verify_distance_contraction(mech, other, grid, spec, cfg.options);
        contraction.worst = std::max({contraction.worst, d.payment_projected - d.payment_base,
                                      d.utility_projected - d.utility_base});
        ++contraction.cases;
      }
      composition.worst = std::max(composition.worst, verify_composition(mech, grid, cfg.options));
      ++composition.cases;
      decomposition.worst = std::max(decomposition.worst, verify_gap_decomposition(mech, grid, cfg.options));
      ++decomposition.cases;
    }
  }
  SuiteReport rep;
  for (CheckResult* c : {&revenue, &gap_identity, &gap_sign, &composition, &decomposition, &idempotence, &contraction}) {
    c->passed = c->worst <= c->tolerance;
    rep.checks.push_back(*c);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace peauction::theoremlab
