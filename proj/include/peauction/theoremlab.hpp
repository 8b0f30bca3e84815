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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "peauction/equivariance.hpp"
#include "peauction/mechanism.hpp"

namespace peauction::theoremlab {

/// Every bid entry takes one of `levels`. Profiles are indexed by their
/// level digits in row-major entry order, first entry most significant.
struct Grid {
  Layout layout;
  std::vector<double> levels;

  std::size_t profile_count() const;
  /// n*m x P matrix of every grid profile.
  Eigen::MatrixXd all_profiles() const;
  /// Index of a profile whose entries are exactly grid levels.
  std::size_t index_of(const Eigen::Ref<const Eigen::VectorXd>& bids) const;
};

inline constexpr std::size_t kEnumerationBudget = 1'000'000;

/// Mechanism tabulated on a finite valuation grid.
class GridMechanism final : public Mechanism {
 public:
  GridMechanism(Grid grid, Eigen::MatrixXd alloc_table, Eigen::MatrixXd pay_table);

  /// Dirichlet(1,...,1) allocation per item over n bidders plus a dummy, and
  /// payment = U[0,1] fraction of the allocated value (feasible and IR).
  static GridMechanism random(const Grid& grid, std::mt19937_64& rng);
  /// Tabulate any mechanism on the grid.
  static GridMechanism tabulate(const Grid& grid, const Mechanism& mech);

  const Layout& layout() const override { return grid_.layout; }
  BatchOutcome evaluate(const Eigen::MatrixXd& inputs) const override;

  const Grid& grid() const { return grid_; }
  Eigen::MatrixXd& alloc_table() { return alloc_; }
  Eigen::MatrixXd& pay_table() { return pay_; }
  const Eigen::MatrixXd& alloc_table() const { return alloc_; }
  const Eigen::MatrixXd& pay_table() const { return pay_; }

 private:
  Grid grid_;
  Eigen::MatrixXd alloc_;  // n*m x P
  Eigen::MatrixXd pay_;    // n x P
};

/// Exact quantities under the uniform distribution over grid profiles.
double exact_revenue(const Mechanism& mech, const Grid& grid);

struct ExactUtilities {
  Eigen::MatrixXd truthful;  // n x P
  Eigen::MatrixXd best;      // n x P, max over all grid misreports
  Eigen::MatrixXd regret() const { return best - truthful; }
};
ExactUtilities exact_utilities(const Mechanism& mech, const Grid& grid);

/// Options shared by the verifiers; `skip_term` is the fault-injection hook
/// forwarded to every projection.
struct VerifyOptions {
  std::optional<std::size_t> skip_term;
};

MechanismPtr make_projection(MechanismPtr base, const ProjectionSpec& spec, const VerifyOptions& opts = {});

/// |E[sum Q p] - E[sum p]|.
double verify_revenue_invariance(MechanismPtr mech, const Grid& grid, const ProjectionSpec& spec,
                                 const VerifyOptions& opts = {});

struct RegretGapResult {
  double regret_difference = 0.0;  // E[sum reg_base] - E[sum reg_proj]
  double expected_gap = 0.0;       // E[Delta]
};
RegretGapResult verify_regret_gap(MechanismPtr mech, const Grid& grid, const ProjectionSpec& spec,
                                  const VerifyOptions& opts = {});

/// Per-profile regret gap Delta(v) = sum_i best_base - sum_i best_proj.
Eigen::VectorXd regret_gap_per_profile(MechanismPtr mech, const Grid& grid, const ProjectionSpec& spec,
                                       const VerifyOptions& opts = {});

/// Max l-infinity discrepancy among Q3, Q1 o Q2 and Q2 o Q1 over all grid profiles.
double verify_composition(MechanismPtr mech, const Grid& grid, const VerifyOptions& opts = {});

/// Max over profiles of |Delta3 - Delta1 - Delta2(Q1 mech)|.
double verify_gap_decomposition(MechanismPtr mech, const Grid& grid, const VerifyOptions& opts = {});

/// Max over profiles of |Q(Q f) - Q f| (allocations and payments).
double verify_idempotence(MechanismPtr mech, const Grid& grid, const ProjectionSpec& spec,
                          const VerifyOptions& opts = {});

struct DistanceResult {
  double payment_base = 0.0;
  double payment_projected = 0.0;
  double utility_base = 0.0;
  double utility_projected = 0.0;
};
/// l_{inf,1} distances between two mechanisms before and after projection:
/// payments over grid profiles, utilities over (valuation, bid) profile pairs.
DistanceResult verify_distance_contraction(MechanismPtr a, MechanismPtr b, const Grid& grid,
                                           const ProjectionSpec& spec, const VerifyOptions& opts = {});

double payment_distance(const Mechanism& a, const Mechanism& b, const Grid& grid);
double utility_distance(const Mechanism& a, const Mechanism& b, const Grid& grid);

struct SuiteConfig {
  std::vector<std::pair<int, int>> shapes{{2, 1}, {3, 1}, {2, 2}, {1, 2}};
  int trials = 100;
  int min_levels = 3;
  int max_levels = 5;
  std::uint64_t seed = 2024;
  double tolerance = 1e-12;
  VerifyOptions options;
};

struct CheckResult {
  std::string name;
  double worst = 0.0;  // worst discrepancy (or most negative value for sign checks)
  double tolerance = 0.0;
  std::size_t cases = 0;
  bool passed = true;
};

struct SuiteReport {
  std::vector<CheckResult> checks;
  double seconds = 0.0;
  bool passed() const;
  nlohmann::json to_json() const;
};

SuiteReport run_suite(const SuiteConfig& cfg);

}  // namespace peauction::theoremlab
