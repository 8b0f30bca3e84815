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

#include "peauction/regret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "peauction/diffnet/adam.hpp"
#include "peauction/errors.hpp"
#include "peauction/parallel.hpp"

namespace peauction {

void MisreportConfig::validate() const {
  if (grid_levels.empty()) {
    if (steps < 0) throw ParameterError("misreport steps must be >= 0");
    if (!(learning_rate > 0)) throw ParameterError("misreport learning rate must be > 0");
  }
  if (num_inits < 1) throw ParameterError("misreport num_inits must be >= 1");
  if (!(box_lo <= box_hi)) throw ParameterError("misreport box must have lo <= hi");
  if (chunk_columns < 1) throw ParameterError("chunk_columns must be >= 1");
}

namespace {

/// (column, bidder) pairs to optimize; `init` holds an optional explicit
/// starting misreport per pair for the first init.
struct PairSet {
  std::vector<Eigen::Index> column;
  std::vector<int> bidder;
  std::vector<std::size_t> key;  // seed key, stable across chunking
  Eigen::MatrixXd init;          // m x P, may be empty
  std::vector<bool> has_init;
};

Eigen::MatrixXd pair_inputs(const Layout& L, const Eigen::MatrixXd& inputs, const PairSet& pairs, std::size_t p0,
                            std::size_t p1, const Eigen::MatrixXd& misreports) {
  Eigen::MatrixXd X(inputs.rows(), static_cast<Eigen::Index>(p1 - p0));
  for (std::size_t p = p0; p < p1; ++p) {
    const auto c = static_cast<Eigen::Index>(p - p0);
    X.col(c) = inputs.col(pairs.column[p]);
    const int i = pairs.bidder[p];
    for (int j = 0; j < L.items; ++j) X(L.bid_row(i, j), c) = misreports(j, c);
  }
  return X;
}

/// Utility of the pair's bidder, valued at the true bids of its column.
void pair_utilities(const Layout& L, const Eigen::MatrixXd& inputs, const PairSet& pairs, std::size_t p0,
                    std::size_t p1, const BatchOutcome& out, Eigen::VectorXd& u) {
  u.resize(static_cast<Eigen::Index>(p1 - p0));
  for (std::size_t p = p0; p < p1; ++p) {
    const auto c = static_cast<Eigen::Index>(p - p0);
    const int i = pairs.bidder[p];
    double v = -out.payments(i, c);
    for (int j = 0; j < L.items; ++j) v += out.allocation(L.bid_row(i, j), c) * inputs(L.bid_row(i, j), pairs.column[p]);
    u(c) = v;
  }
}

struct PairResult {
  Eigen::MatrixXd misreports;  // m x P
  Eigen::VectorXd utilities;   // P
};

void search_chunk_gradient(const Mechanism& mech, const Eigen::MatrixXd& inputs, const PairSet& pairs,
                           std::size_t p0, std::size_t p1, const MisreportConfig& cfg, PairResult& res) {
  const Layout& L = mech.layout();
  const int m = L.items;
  const auto C = static_cast<Eigen::Index>(p1 - p0);
  if (cfg.steps > 0 && !mech.differentiable()) {
    throw ParameterError("gradient misreport search needs a differentiable mechanism; use grid_levels");
  }
  BatchOutcome cot = BatchOutcome::zeros(L, C);
  for (std::size_t p = p0; p < p1; ++p) {
    const auto c = static_cast<Eigen::Index>(p - p0);
    const int i = pairs.bidder[p];
    for (int j = 0; j < m; ++j) cot.allocation(L.bid_row(i, j), c) = inputs(L.bid_row(i, j), pairs.column[p]);
    cot.payments(i, c) = -1.0;
  }
  Eigen::MatrixXd M(m, C);
  Eigen::VectorXd u;
  std::vector<double> flat_grad(static_cast<std::size_t>(m * C));
  for (int k = 0; k < cfg.num_inits; ++k) {
    for (std::size_t p = p0; p < p1; ++p) {
      const auto c = static_cast<Eigen::Index>(p - p0);
      if (k == 0 && pairs.has_init[p]) {
        M.col(c) = pairs.init.col(static_cast<Eigen::Index>(p));
      } else {
        SplitMix64 rng(cfg.seed * 0x100000001B3ULL + pairs.key[p] * 7919ULL + static_cast<std::uint64_t>(k) * 104729ULL);
        for (int j = 0; j < m; ++j) M(j, c) = cfg.box_lo + (cfg.box_hi - cfg.box_lo) * rng.uniform();
      }
    }
    Eigen::MatrixXd X = pair_inputs(L, inputs, pairs, p0, p1, M);
    diffnet::AdamState adam(static_cast<std::size_t>(m * C), {cfg.learning_rate, 0.9, 0.999, 1e-8});
    for (int s = 0;; ++s) {
      const bool last = s >= cfg.steps;
      BatchOutcome out;
      Eigen::MatrixXd grad;
      if (last) {
        out = mech.evaluate(X);
      } else {
        std::tie(out, grad) = mech.value_and_pullback(X, cot, nullptr);
      }
      pair_utilities(L, inputs, pairs, p0, p1, out, u);
      for (Eigen::Index c = 0; c < C; ++c) {
        const auto p = static_cast<Eigen::Index>(p0) + c;
        if (u(c) > res.utilities(p)) {
          res.utilities(p) = u(c);
          res.misreports.col(p) = M.col(c);
        }
      }
      if (last) break;
      for (Eigen::Index c = 0; c < C; ++c) {
        const int i = pairs.bidder[p0 + static_cast<std::size_t>(c)];
        for (int j = 0; j < m; ++j) flat_grad[static_cast<std::size_t>(c * m + j)] = -grad(L.bid_row(i, j), c);
      }
      adam.step(std::span<double>(M.data(), static_cast<std::size_t>(M.size())), flat_grad);
      M = M.cwiseMax(cfg.box_lo).cwiseMin(cfg.box_hi);
      for (Eigen::Index c = 0; c < C; ++c) {
        const int i = pairs.bidder[p0 + static_cast<std::size_t>(c)];
        for (int j = 0; j < m; ++j) X(L.bid_row(i, j), c) = M(j, c);
      }
    }
  }
}

void search_chunk_grid(const Mechanism& mech, const Eigen::MatrixXd& inputs, const PairSet& pairs, std::size_t p0,
                       std::size_t p1, const MisreportConfig& cfg, PairResult& res) {
  const Layout& L = mech.layout();
  const int m = L.items;
  const auto C = static_cast<Eigen::Index>(p1 - p0);
  const auto levels = static_cast<std::size_t>(cfg.grid_levels.size());
  std::size_t combos = 1;
  for (int j = 0; j < m; ++j) {
    if (combos > 100'000'000 / levels) throw BudgetError("misreport grid too large");
    combos *= levels;
  }
  Eigen::MatrixXd M(m, C);
  Eigen::VectorXd u;
  std::vector<std::size_t> digit(static_cast<std::size_t>(m), 0);
  for (std::size_t combo = 0; combo < combos; ++combo) {
    std::size_t rest = combo;
    for (int j = m - 1; j >= 0; --j) {
      digit[static_cast<std::size_t>(j)] = rest % levels;
      rest /= levels;
    }
    for (int j = 0; j < m; ++j) M.row(j).setConstant(cfg.grid_levels[digit[static_cast<std::size_t>(j)]]);
    const Eigen::MatrixXd X = pair_inputs(L, inputs, pairs, p0, p1, M);
    pair_utilities(L, inputs, pairs, p0, p1, mech.evaluate(X), u);
    for (Eigen::Index c = 0; c < C; ++c) {
      const auto p = static_cast<Eigen::Index>(p0) + c;
      if (u(c) > res.utilities(p)) {
        res.utilities(p) = u(c);
        res.misreports.col(p) = M.col(c);
      }
    }
  }
}

PairResult search_pairs(const Mechanism& mech, const Eigen::MatrixXd& inputs, const PairSet& pairs,
                        const MisreportConfig& cfg) {
  cfg.validate();
  mech.check_inputs(inputs);
  const auto P = pairs.column.size();
  PairResult res{Eigen::MatrixXd::Zero(mech.layout().items, static_cast<Eigen::Index>(P)),
                 Eigen::VectorXd::Constant(static_cast<Eigen::Index>(P), -std::numeric_limits<double>::infinity())};
  const std::size_t chunk = cfg.chunk_columns;
  const std::size_t chunks = (P + chunk - 1) / chunk;
  parallel_for(chunks, cfg.workers, [&](std::size_t t) {
    const std::size_t p0 = t * chunk;
    const std::size_t p1 = std::min(P, p0 + chunk);
    if (cfg.grid_levels.empty()) {
      search_chunk_gradient(mech, inputs, pairs, p0, p1, cfg, res);
    } else {
      search_chunk_grid(mech, inputs, pairs, p0, p1, cfg, res);
    }
  });
  return res;
}

BatchOutcome evaluate_chunked(const Mechanism& mech, const Eigen::MatrixXd& inputs, const MisreportConfig& cfg) {
  const Eigen::Index B = inputs.cols();
  BatchOutcome out = BatchOutcome::zeros(mech.layout(), B);
  const auto chunk = static_cast<Eigen::Index>(cfg.chunk_columns);
  const auto chunks = static_cast<std::size_t>((B + chunk - 1) / chunk);
  parallel_for(chunks, cfg.workers, [&](std::size_t t) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(t) * chunk;
    const Eigen::Index w = std::min(chunk, B - c0);
    const BatchOutcome part = mech.evaluate(inputs.middleCols(c0, w));
    out.allocation.middleCols(c0, w) = part.allocation;
    out.payments.middleCols(c0, w) = part.payments;
  });
  return out;
}

}  // namespace

Eigen::MatrixXd misreport_inputs(const Layout& L, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& misreports) {
  const Eigen::Index B = inputs.cols();
  const int n = L.bidders;
  if (misreports.rows() != L.items || misreports.cols() != B * n) throw ShapeError("misreport matrix shape mismatch");
  Eigen::MatrixXd X(inputs.rows(), B * n);
  for (Eigen::Index c = 0; c < B; ++c) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index col = c * n + i;
      X.col(col) = inputs.col(c);
      for (int j = 0; j < L.items; ++j) X(L.bid_row(i, j), col) = misreports(j, col);
    }
  }
  return X;
}

Eigen::MatrixXd misreport_utilities(const Mechanism& mech, const Eigen::MatrixXd& inputs,
                                    const Eigen::MatrixXd& misreports) {
  const Layout& L = mech.layout();
  const Eigen::Index B = inputs.cols();
  const int n = L.bidders;
  const BatchOutcome out = mech.evaluate(misreport_inputs(L, inputs, misreports));
  Eigen::MatrixXd u(n, B);
  for (Eigen::Index c = 0; c < B; ++c) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index col = c * n + i;
      double v = -out.payments(i, col);
      for (int j = 0; j < L.items; ++j) v += out.allocation(L.bid_row(i, j), col) * inputs(L.bid_row(i, j), c);
      u(i, c) = v;
    }
  }
  return u;
}

MisreportStore::MisreportStore(std::size_t samples, const Layout& layout)
    : bidders_(layout.bidders),
      items_(layout.items),
      data_(Eigen::MatrixXd::Zero(layout.items, static_cast<Eigen::Index>(samples) * layout.bidders)),
      filled_(samples, false) {}

Eigen::MatrixXd MisreportStore::get(std::size_t sample) const {
  if (!has(sample)) throw ParameterError("misreport store has no entry for sample");
  return data_.middleCols(static_cast<Eigen::Index>(sample) * bidders_, bidders_);
}

void MisreportStore::set(std::size_t sample, const Eigen::MatrixXd& block) {
  if (sample >= filled_.size()) throw ParameterError("misreport store index out of range");
  if (block.rows() != items_ || block.cols() != bidders_) throw ShapeError("misreport block shape mismatch");
  data_.middleCols(static_cast<Eigen::Index>(sample) * bidders_, bidders_) = block;
  filled_[sample] = true;
}

MisreportSearch search_misreports(const Mechanism& mech, const Eigen::MatrixXd& inputs, const MisreportConfig& cfg,
                                  MisreportStore* store, std::span<const std::size_t> indices) {
  const Layout& L = mech.layout();
  const Eigen::Index B = inputs.cols();
  const int n = L.bidders;
  if (!indices.empty() && static_cast<Eigen::Index>(indices.size()) != B) {
    throw ShapeError("indices must match batch size");
  }
  const auto key_of = [&](Eigen::Index c) { return indices.empty() ? static_cast<std::size_t>(c) : indices[static_cast<std::size_t>(c)]; };
  PairSet pairs;
  const auto P = static_cast<std::size_t>(B * n);
  pairs.column.resize(P);
  pairs.bidder.resize(P);
  pairs.key.resize(P);
  pairs.has_init.assign(P, false);
  const bool warm = store && cfg.warm_start && cfg.grid_levels.empty();
  if (warm) pairs.init = Eigen::MatrixXd::Zero(L.items, static_cast<Eigen::Index>(P));
  for (Eigen::Index c = 0; c < B; ++c) {
    const std::size_t key = key_of(c);
    const bool have = warm && store->has(key);
    Eigen::MatrixXd block;
    if (have) block = store->get(key);
    for (int i = 0; i < n; ++i) {
      const auto p = static_cast<std::size_t>(c * n + i);
      pairs.column[p] = c;
      pairs.bidder[p] = i;
      pairs.key[p] = key * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
      if (have) {
        pairs.init.col(static_cast<Eigen::Index>(p)) = block.col(i);
        pairs.has_init[p] = true;
      }
    }
  }
  PairResult r = search_pairs(mech, inputs, pairs, cfg);
  MisreportSearch out;
  out.misreports = std::move(r.misreports);
  out.utilities = Eigen::Map<Eigen::MatrixXd>(r.utilities.data(), n, B);
  if (store && cfg.grid_levels.empty()) {
    for (Eigen::Index c = 0; c < B; ++c) store->set(key_of(c), out.misreports.middleCols(c * n, n));
  }
  return out;
}

BestResponse best_response(const Mechanism& mech, const Eigen::VectorXd& input, int bidder,
                           const MisreportConfig& cfg, const Eigen::VectorXd& init) {
  const Layout& L = mech.layout();
  if (bidder < 0 || bidder >= L.bidders) throw ParameterError("bidder index out of range");
  if (init.size() != L.items) throw ShapeError("init misreport length must equal m");
  if ((init.array() < cfg.box_lo).any() || (init.array() > cfg.box_hi).any()) {
    throw ParameterError("init misreport outside the valuation box");
  }
  Eigen::MatrixXd col = input;
  PairSet pairs;
  pairs.column = {0};
  pairs.bidder = {bidder};
  pairs.key = {static_cast<std::size_t>(bidder)};
  pairs.init = init;
  pairs.has_init = {true};
  const PairResult r = search_pairs(mech, col, pairs, cfg);
  return {r.misreports.col(0), r.utilities(0)};
}

RegretReport empirical_regret(const Mechanism& mech, const Eigen::MatrixXd& inputs, const MisreportConfig& cfg,
                              MisreportStore* store, std::span<const std::size_t> indices) {
  mech.check_inputs(inputs);
  const Layout& L = mech.layout();
  const Eigen::Index B = inputs.cols();
  const int n = L.bidders;
  RegretReport rep;
  const BatchOutcome truthful = evaluate_chunked(mech, inputs, cfg);
  rep.truthful_utilities = utilities(L, truthful, inputs);
  MisreportSearch search = search_misreports(mech, inputs, cfg, store, indices);
  rep.best_misreports = std::move(search.misreports);
  rep.raw = search.utilities - rep.truthful_utilities;
  rep.per_sample = rep.raw.cwiseMax(0.0);
  rep.per_bidder_regret = rep.per_sample.rowwise().mean();
  rep.per_bidder_se = Eigen::VectorXd::Zero(n);
  const double denom = B > 1 ? static_cast<double>(B - 1) : 1.0;
  for (int i = 0; i < n; ++i) {
    const double var = (rep.per_sample.row(i).array() - rep.per_bidder_regret(i)).square().sum() / denom;
    rep.per_bidder_se(i) = std::sqrt(var / static_cast<double>(B));
  }
  const Eigen::RowVectorXd avg = rep.per_sample.colwise().mean();
  rep.mean_regret = rep.per_bidder_regret.mean();
  rep.mean_regret_se = std::sqrt((avg.array() - rep.mean_regret).square().sum() / denom / static_cast<double>(B));
  return rep;
}

double regret_gap(MechanismPtr base, const ProjectionSpec& spec, const Eigen::VectorXd& input,
                  const MisreportConfig& cfg) {
  const ProjectedMechanism projected(base, spec);
  Eigen::MatrixXd col = input;
  const double base_best = search_misreports(*base, col, cfg).utilities.sum();
  const double proj_best = search_misreports(projected, col, cfg).utilities.sum();
  return base_best - proj_best;
}

}  // namespace peauction
