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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "peauction/equivariance.hpp"
#include "peauction/mechanism.hpp"

namespace peauction {

/// How the inner maximization over misreports is carried out.
///
/// With `grid_levels` empty, each misreport runs `steps` Adam ascent steps
/// (learning rate `learning_rate`) projected onto [box_lo, box_hi]^m, from
/// `num_inits` starts; the best utility seen along any trajectory is kept.
/// With `grid_levels` set, every misreport in grid_levels^m is enumerated.
struct MisreportConfig {
  int steps = 25;
  double learning_rate = 0.1;
  int num_inits = 1;
  bool warm_start = false;
  double box_lo = 0.0;
  double box_hi = 1.0;
  std::vector<double> grid_levels;
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t chunk_columns = 2048;

  void validate() const;
};

struct BestResponse {
  Eigen::VectorXd misreport;
  double utility = 0.0;
};

/// Best misreport for one bidder in one profile, starting from `init`.
BestResponse best_response(const Mechanism& mech, const Eigen::VectorXd& input, int bidder,
                           const MisreportConfig& cfg, const Eigen::VectorXd& init);

/// Inputs with bidder i's bids replaced: column c*n+i of the result is
/// inputs.col(c) with row block i set to misreports.col(c*n+i).
Eigen::MatrixXd misreport_inputs(const Layout& layout, const Eigen::MatrixXd& inputs,
                                 const Eigen::MatrixXd& misreports);

/// u_i(v_i, (b_i', v_-i)) for every (column, bidder) at the given misreports;
/// returns n x B.
Eigen::MatrixXd misreport_utilities(const Mechanism& mech, const Eigen::MatrixXd& inputs,
                                    const Eigen::MatrixXd& misreports);

/// Misreports kept across epochs, keyed by (sample index, bidder).
class MisreportStore {
 public:
  MisreportStore() = default;
  MisreportStore(std::size_t samples, const Layout& layout);

  bool has(std::size_t sample) const { return sample < filled_.size() && filled_[sample]; }
  /// m x n block for one sample (column i = bidder i).
  Eigen::MatrixXd get(std::size_t sample) const;
  void set(std::size_t sample, const Eigen::MatrixXd& block);
  std::size_t size() const { return filled_.size(); }

 private:
  int bidders_ = 0;
  int items_ = 0;
  Eigen::MatrixXd data_;  // m x (samples*n)
  std::vector<bool> filled_;
};

struct MisreportSearch {
  Eigen::MatrixXd misreports;  // m x (B*n), best found
  Eigen::MatrixXd utilities;   // n x B, utility at the best misreport
};

/// Batched inner maximization. With a store, warm-start entries seed the
/// first init and the best misreports are written back; `indices` maps batch
/// columns to store keys (defaults to 0..B-1).
MisreportSearch search_misreports(const Mechanism& mech, const Eigen::MatrixXd& inputs, const MisreportConfig& cfg,
                                  MisreportStore* store = nullptr, std::span<const std::size_t> indices = {});

struct RegretReport {
  Eigen::VectorXd per_bidder_regret;  // clamped at 0, averaged over samples
  Eigen::VectorXd per_bidder_se;
  double mean_regret = 0.0;
  double mean_regret_se = 0.0;
  Eigen::MatrixXd per_sample;          // n x B, clamped
  Eigen::MatrixXd raw;                 // n x B, best - truthful (unclamped)
  Eigen::MatrixXd truthful_utilities;  // n x B
  Eigen::MatrixXd best_misreports;     // m x (B*n)
};

RegretReport empirical_regret(const Mechanism& mech, const Eigen::MatrixXd& inputs, const MisreportConfig& cfg,
                              MisreportStore* store = nullptr, std::span<const std::size_t> indices = {});

/// Sum over bidders of best-response utility under the base mechanism minus
/// the same under its projection, for one profile. Reported raw (may dip
/// below zero through inner-optimization error).
double regret_gap(MechanismPtr base, const ProjectionSpec& spec, const Eigen::VectorXd& input,
                  const MisreportConfig& cfg);

}  // namespace peauction
