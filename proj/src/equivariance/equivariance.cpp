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

#include "peauction/equivariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "peauction/errors.hpp"

namespace peauction {

namespace {

std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    try {
      out.push_back(std::stoi(cell));
    } catch (const std::exception&) {
      throw ParameterError("bad index '" + cell + "' in subset list");
    }
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

Permutation identity(int k) {
  Permutation p(static_cast<std::size_t>(k));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

void validate_subset(const std::vector<int>& subset, int size, const char* what) {
  std::set<int> seen;
  for (int idx : subset) {
    if (idx < 0 || idx >= size) throw ParameterError(std::string(what) + " subset index out of range");
    if (!seen.insert(idx).second) throw ParameterError(std::string(what) + " subset has duplicates");
  }
}

/// Permutations of {0..k-1} that move only the indices in `subset`.
std::vector<Permutation> subset_permutations(const std::vector<int>& subset, int k) {
  if (subset.size() <= 1) return {identity(k)};
  std::vector<int> sorted = subset;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Permutation> out;
  for (const auto& local : enumerate_permutations(static_cast<int>(sorted.size()))) {
    Permutation p = identity(k);
    for (std::size_t t = 0; t < sorted.size(); ++t) p[static_cast<std::size_t>(sorted[t])] = sorted[static_cast<std::size_t>(local[t])];
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::string mode_name(ProjectionMode mode) {
  switch (mode) {
    case ProjectionMode::bidder:
      return "bidder";
    case ProjectionMode::item:
      return "item";
    case ProjectionMode::aggregated:
      return "aggregated";
    case ProjectionMode::subgroup:
      return "subgroup";
  }
  return "unknown";
}

std::string ProjectionSpec::to_string() const {
  if (mode != ProjectionMode::subgroup) return mode_name(mode);
  return "subgroup:" + join(bidder_subset) + ";" + join(item_subset);
}

ProjectionSpec ProjectionSpec::from_string(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return parse(text);
  const std::string sets = text.substr(colon + 1);
  const auto semi = sets.find(';');
  return parse(text.substr(0, colon), sets.substr(0, semi), semi == std::string::npos ? "" : sets.substr(semi + 1));
}

ProjectionSpec ProjectionSpec::parse(const std::string& mode, const std::string& bidders,
                                     const std::string& items) {
  ProjectionSpec s;
  if (mode == "bidder" || mode == "Q1") {
    s.mode = ProjectionMode::bidder;
  } else if (mode == "item" || mode == "Q2") {
    s.mode = ProjectionMode::item;
  } else if (mode == "aggregated" || mode == "Q3") {
    s.mode = ProjectionMode::aggregated;
  } else if (mode == "subgroup") {
    s.mode = ProjectionMode::subgroup;
    s.bidder_subset = parse_index_list(bidders);
    s.item_subset = parse_index_list(items);
  } else {
    throw ParameterError("unknown projection mode '" + mode + "'");
  }
  return s;
}

void ProjectionSpec::validate(int n, int m) const {
  if (mode != ProjectionMode::subgroup) return;
  if (bidder_subset.empty() && item_subset.empty()) {
    throw ParameterError("subgroup projection needs at least one nonempty subset");
  }
  validate_subset(bidder_subset, n, "bidder");
  validate_subset(item_subset, m, "item");
}

std::vector<GroupElement> projection_group(const ProjectionSpec& spec, int n, int m, std::size_t budget) {
  spec.validate(n, m);
  int kn = 1;
  int km = 1;
  switch (spec.mode) {
    case ProjectionMode::bidder:
      kn = n;
      break;
    case ProjectionMode::item:
      km = m;
      break;
    case ProjectionMode::aggregated:
      kn = n;
      km = m;
      break;
    case ProjectionMode::subgroup:
      kn = std::max<int>(1, static_cast<int>(spec.bidder_subset.size()));
      km = std::max<int>(1, static_cast<int>(spec.item_subset.size()));
      break;
  }
  const double size = factorial(kn) * factorial(km);
  if (size > static_cast<double>(budget)) {
    throw BudgetError("projection group has " + std::to_string(static_cast<long long>(size)) +
                      " elements, over the budget of " + std::to_string(budget) + "; use subgroup mode");
  }
  std::vector<Permutation> bp;
  std::vector<Permutation> ip;
  switch (spec.mode) {
    case ProjectionMode::bidder:
      bp = enumerate_permutations(n);
      ip = {identity(m)};
      break;
    case ProjectionMode::item:
      bp = {identity(n)};
      ip = enumerate_permutations(m);
      break;
    case ProjectionMode::aggregated:
      bp = enumerate_permutations(n);
      ip = enumerate_permutations(m);
      break;
    case ProjectionMode::subgroup:
      bp = subset_permutations(spec.bidder_subset, n);
      ip = subset_permutations(spec.item_subset, m);
      break;
  }
  std::vector<GroupElement> out;
  out.reserve(bp.size() * ip.size());
  for (const auto& b : bp) {
    for (const auto& i : ip) out.push_back({b, i});
  }
  return out;
}

std::vector<int> input_index_map(const Layout& L, const GroupElement& g) {
  if (static_cast<int>(g.bidders.size()) != L.bidders || static_cast<int>(g.items.size()) != L.items) {
    throw ShapeError("group element does not match layout");
  }
  std::vector<int> map(static_cast<std::size_t>(L.input_dim()));
  for (int a = 0; a < L.bidders; ++a) {
    for (int b = 0; b < L.items; ++b) map[static_cast<std::size_t>(L.bid_row(a, b))] = L.bid_row(g.bidders[a], g.items[b]);
  }
  const int bidder_off = L.bid_dim();
  for (int a = 0; a < L.bidders; ++a) {
    for (int d = 0; d < L.bidder_context_dim; ++d) {
      map[static_cast<std::size_t>(bidder_off + a * L.bidder_context_dim + d)] =
          bidder_off + g.bidders[a] * L.bidder_context_dim + d;
    }
  }
  const int item_off = bidder_off + L.bidders * L.bidder_context_dim;
  for (int b = 0; b < L.items; ++b) {
    for (int d = 0; d < L.item_context_dim; ++d) {
      map[static_cast<std::size_t>(item_off + b * L.item_context_dim + d)] = item_off + g.items[b] * L.item_context_dim + d;
    }
  }
  return map;
}

Eigen::MatrixXd permute_inputs(const Layout& layout, const GroupElement& g, const Eigen::MatrixXd& inputs) {
  const auto map = input_index_map(layout, g);
  Eigen::MatrixXd out(inputs.rows(), inputs.cols());
  for (std::size_t r = 0; r < map.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = inputs.row(map[r]);
  return out;
}

ProjectedMechanism::ProjectedMechanism(MechanismPtr base, ProjectionSpec spec)
    : ProjectedMechanism(std::move(base), std::move(spec), Options{}) {}

ProjectedMechanism::ProjectedMechanism(MechanismPtr base, ProjectionSpec spec, Options options)
    : base_(std::move(base)), spec_(std::move(spec)), options_(options) {
  if (!base_) throw ParameterError("ProjectedMechanism needs a base mechanism");
  const Layout& L = base_->layout();
  group_ = projection_group(spec_, L.bidders, L.items, options_.budget);
  maps_.reserve(group_.size());
  for (const auto& g : group_) maps_.push_back(input_index_map(L, g));
}

BatchOutcome ProjectedMechanism::evaluate(const Eigen::MatrixXd& inputs) const {
  check_inputs(inputs);
  const Layout& L = layout();
  const Eigen::Index B = inputs.cols();
  BatchOutcome acc = BatchOutcome::zeros(L, B);
  Eigen::MatrixXd permuted(inputs.rows(), B);
  for (std::size_t t = 0; t < group_.size(); ++t) {
    if (options_.skip_term && *options_.skip_term == t) continue;
    const auto& map = maps_[t];
    for (std::size_t r = 0; r < map.size(); ++r) permuted.row(static_cast<Eigen::Index>(r)) = inputs.row(map[r]);
    const BatchOutcome out = base_->evaluate(permuted);
    for (int r = 0; r < L.bid_dim(); ++r) acc.allocation.row(map[static_cast<std::size_t>(r)]) += out.allocation.row(r);
    for (int a = 0; a < L.bidders; ++a) acc.payments.row(group_[t].bidders[a]) += out.payments.row(a);
  }
  const double inv = 1.0 / static_cast<double>(group_.size());
  acc.allocation *= inv;
  acc.payments *= inv;
  return acc;
}

std::pair<BatchOutcome, Eigen::MatrixXd> ProjectedMechanism::value_and_pullback(
    const Eigen::MatrixXd& inputs, const BatchOutcome& cot, MechanismGradient* param_grad) const {
  check_inputs(inputs);
  const Layout& L = layout();
  const Eigen::Index B = inputs.cols();
  const double inv = 1.0 / static_cast<double>(group_.size());
  BatchOutcome acc = BatchOutcome::zeros(L, B);
  Eigen::MatrixXd d_inputs = Eigen::MatrixXd::Zero(inputs.rows(), B);
  Eigen::MatrixXd permuted(inputs.rows(), B);
  BatchOutcome term_cot = BatchOutcome::zeros(L, B);
  for (std::size_t t = 0; t < group_.size(); ++t) {
    if (options_.skip_term && *options_.skip_term == t) continue;
    const auto& map = maps_[t];
    const auto& g = group_[t];
    for (std::size_t r = 0; r < map.size(); ++r) permuted.row(static_cast<Eigen::Index>(r)) = inputs.row(map[r]);
    for (int r = 0; r < L.bid_dim(); ++r) term_cot.allocation.row(r) = inv * cot.allocation.row(map[static_cast<std::size_t>(r)]);
    for (int a = 0; a < L.bidders; ++a) term_cot.payments.row(a) = inv * cot.payments.row(g.bidders[a]);
    auto [out, d_perm] = base_->value_and_pullback(permuted, term_cot, param_grad);
    for (int r = 0; r < L.bid_dim(); ++r) acc.allocation.row(map[static_cast<std::size_t>(r)]) += out.allocation.row(r);
    for (int a = 0; a < L.bidders; ++a) acc.payments.row(g.bidders[a]) += out.payments.row(a);
    for (std::size_t r = 0; r < map.size(); ++r) d_inputs.row(map[r]) += d_perm.row(static_cast<Eigen::Index>(r));
  }
  acc.allocation *= inv;
  acc.payments *= inv;
  return {std::move(acc), std::move(d_inputs)};
}

std::shared_ptr<ProjectedMechanism> project(MechanismPtr base, ProjectionSpec spec) {
  return std::make_shared<ProjectedMechanism>(std::move(base), std::move(spec));
}

AuctionOutcome project_bidder(MechanismPtr base, const Eigen::VectorXd& input) {
  return run_mechanism(ProjectedMechanism(std::move(base), ProjectionSpec::bidder()), input);
}

AuctionOutcome project_item(MechanismPtr base, const Eigen::VectorXd& input) {
  return run_mechanism(ProjectedMechanism(std::move(base), ProjectionSpec::item()), input);
}

AuctionOutcome project_aggregated(MechanismPtr base, const Eigen::VectorXd& input) {
  return run_mechanism(ProjectedMechanism(std::move(base), ProjectionSpec::aggregated()), input);
}

AuctionOutcome project_subgroup(MechanismPtr base, const ProjectionSpec& spec, const Eigen::VectorXd& input) {
  if (spec.mode != ProjectionMode::subgroup) throw ParameterError("project_subgroup needs subgroup mode");
  return run_mechanism(ProjectedMechanism(std::move(base), spec), input);
}

double equivariance_defect(const Mechanism& mech, const Eigen::MatrixXd& inputs, const ProjectionSpec& spec) {
  mech.check_inputs(inputs);
  const Layout& L = mech.layout();
  const BatchOutcome ref = mech.evaluate(inputs);
  double defect = 0.0;
  for (const auto& g : projection_group(spec, L.bidders, L.items)) {
    const auto map = input_index_map(L, g);
    Eigen::MatrixXd permuted(inputs.rows(), inputs.cols());
    for (std::size_t r = 0; r < map.size(); ++r) permuted.row(static_cast<Eigen::Index>(r)) = inputs.row(map[r]);
    const BatchOutcome out = mech.evaluate(permuted);
    for (int r = 0; r < L.bid_dim(); ++r) {
      defect = std::max(defect, (out.allocation.row(r) - ref.allocation.row(map[static_cast<std::size_t>(r)]))
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    for (int a = 0; a < L.bidders; ++a) {
      defect = std::max(defect, (out.payments.row(a) - ref.payments.row(g.bidders[a])).cwiseAbs().maxCoeff());
    }
  }
  return defect;
}

}  // namespace peauction
