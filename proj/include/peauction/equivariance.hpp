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

#include <optional>
#include <string>
#include <vector>

#include "peauction/mechanism.hpp"
#include "peauction/valuations.hpp"

namespace peauction {

enum class ProjectionMode { bidder, item, aggregated, subgroup };

/// Which orbit average to apply. Subsets are 0-based index sets; in subgroup
/// mode the group permutes the listed bidders/items and fixes everything else.
struct ProjectionSpec {
  ProjectionMode mode = ProjectionMode::aggregated;
  std::vector<int> bidder_subset;
  std::vector<int> item_subset;

  static ProjectionSpec bidder() { return {ProjectionMode::bidder, {}, {}}; }
  static ProjectionSpec item() { return {ProjectionMode::item, {}, {}}; }
  static ProjectionSpec aggregated() { return {ProjectionMode::aggregated, {}, {}}; }
  static ProjectionSpec subgroup(std::vector<int> bidders, std::vector<int> items) {
    return {ProjectionMode::subgroup, std::move(bidders), std::move(items)};
  }

  /// "bidder", "item", "aggregated" or "subgroup:<bidders>;<items>", e.g.
  /// "subgroup:0,1;" ; from_string inverts it.
  std::string to_string() const;
  static ProjectionSpec from_string(const std::string& text);
  static ProjectionSpec parse(const std::string& mode, const std::string& bidders = "",
                              const std::string& items = "");
  void validate(int n, int m) const;
};

std::string mode_name(ProjectionMode mode);

/// One element (sigma_n, sigma_m) of a bidder x item permutation group.
struct GroupElement {
  Permutation bidders;
  Permutation items;
};

inline constexpr std::size_t kDefaultGroupBudget = 5040;

/// Group elements selected by `spec` for an n x m auction, in canonical
/// lexicographic (bidder, item) order. Throws BudgetError above `budget`.
std::vector<GroupElement> projection_group(const ProjectionSpec& spec, int n, int m,
                                           std::size_t budget = kDefaultGroupBudget);

/// Input-row map for a group element: permuted input row r equals original
/// row map[r]. Output bid-shaped rows scatter back through the same map.
std::vector<int> input_index_map(const Layout& layout, const GroupElement& g);

/// Orbit average of a base mechanism, evaluated by running the base on every
/// permuted input and un-permuting the outputs. Gradients flow through every
/// orbit term, so the projection can be trained directly.
class ProjectedMechanism final : public Mechanism {
 public:
  struct Options {
    std::size_t budget = kDefaultGroupBudget;
    /// Fault injection for negative tests: drop this orbit term from the sum
    /// (the average still divides by the full group size).
    std::optional<std::size_t> skip_term;
  };

  ProjectedMechanism(MechanismPtr base, ProjectionSpec spec);
  ProjectedMechanism(MechanismPtr base, ProjectionSpec spec, Options options);

  const Layout& layout() const override { return base_->layout(); }
  BatchOutcome evaluate(const Eigen::MatrixXd& inputs) const override;
  bool differentiable() const override { return base_->differentiable(); }
  bool has_parameters() const override { return base_->has_parameters(); }
  std::pair<BatchOutcome, Eigen::MatrixXd> value_and_pullback(
      const Eigen::MatrixXd& inputs, const BatchOutcome& cotangent,
      MechanismGradient* param_grad) const override;
  std::size_t forward_cost() const override { return group_.size() * base_->forward_cost(); }

  const Mechanism& base() const { return *base_; }
  MechanismPtr base_ptr() const { return base_; }
  const ProjectionSpec& spec() const { return spec_; }
  const std::vector<GroupElement>& group() const { return group_; }

 private:
  MechanismPtr base_;
  ProjectionSpec spec_;
  Options options_;
  std::vector<GroupElement> group_;
  std::vector<std::vector<int>> maps_;
};

std::shared_ptr<ProjectedMechanism> project(MechanismPtr base, ProjectionSpec spec);

/// Single-profile Q1, Q2, Q3 and subgroup projections.
AuctionOutcome project_bidder(MechanismPtr base, const Eigen::VectorXd& input);
AuctionOutcome project_item(MechanismPtr base, const Eigen::VectorXd& input);
AuctionOutcome project_aggregated(MechanismPtr base, const Eigen::VectorXd& input);
AuctionOutcome project_subgroup(MechanismPtr base, const ProjectionSpec& spec, const Eigen::VectorXd& input);

/// max over group elements and columns of the l-infinity gap between
/// f(g . v) and g . f(v), over allocations and payments.
double equivariance_defect(const Mechanism& mech, const Eigen::MatrixXd& inputs, const ProjectionSpec& spec);

/// Permute a batch of input columns by a group element (rows gathered).
Eigen::MatrixXd permute_inputs(const Layout& layout, const GroupElement& g, const Eigen::MatrixXd& inputs);

}  // namespace peauction
