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

#include "peauction/myerson.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "peauction/errors.hpp"

namespace peauction::myerson {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct Top2 {
  int winner = -1;
  double best = -1.0;
  double second = 0.0;  // 0 when only one bidder
};

Top2 top_two(const Eigen::VectorXd& bids) {
  Top2 t;
  t.second = 0.0;
  double second = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < bids.size(); ++i) {
    if (bids(i) > t.best) {
      second = t.best;
      t.best = bids(i);
      t.winner = static_cast<int>(i);
    } else if (bids(i) > second) {
      second = bids(i);
    }
  }
  t.second = std::max(0.0, second);
  return t;
}

}  // namespace

double myerson_reserve_uniform01() { return 0.5; }

double virtual_value(const DistributionSpec& dist, double v) {
  switch (dist.kind) {
    case DistributionKind::uniform: {
      const double width = dist.hi - dist.lo;
      if (!(width > 0)) throw ParameterError("uniform support must have hi > lo");
      // F = (v - lo)/w, f = 1/w
      return v - (dist.hi - v);
    }
    case DistributionKind::truncated_normal: {
      if (!(dist.sigma > 0)) throw ParameterError("truncated normal needs sigma > 0");
      const double zb = (dist.hi - dist.mu) / dist.sigma;
      const double z = (v - dist.mu) / dist.sigma;
      const double tail = std_normal_cdf(zb) - std_normal_cdf(z);  // (1-F) * mass
      const double dens = std_normal_pdf(z) / dist.sigma;          // f * mass
      return v - tail / dens;
    }
    default:
      throw ParameterError("virtual value supports uniform and truncated normal only");
  }
}

double myerson_reserve(const DistributionSpec& dist) {
  if (dist.kind == DistributionKind::uniform) {
    if (dist.lo == 0.0 && dist.hi == 1.0) return myerson_reserve_uniform01();
    return std::max(dist.lo, dist.hi / 2.0);
  }
  double lo = dist.lo;
  double hi = dist.hi;
  if (virtual_value(dist, lo) >= 0) return lo;
  if (virtual_value(dist, hi) <= 0) return hi;
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (virtual_value(dist, mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SecondPriceResult run_second_price(const Eigen::VectorXd& bids, double reserve) {
  if (bids.size() < 1) throw ParameterError("second price needs at least one bidder");
  SecondPriceResult res;
  res.payments = Eigen::VectorXd::Zero(bids.size());
  const Top2 t = top_two(bids);
  if (t.best >= reserve) {
    res.winner = t.winner;
    res.payments(t.winner) = std::max(t.second, reserve);
  }
  return res;
}

AuctionOutcome run_second_price_outcome(const Eigen::VectorXd& bids, double reserve) {
  const auto r = run_second_price(bids, reserve);
  AuctionOutcome out;
  out.allocation = Eigen::MatrixXd::Zero(bids.size(), 1);
  if (r.winner >= 0) out.allocation(r.winner, 0) = 1.0;
  out.payments = r.payments;
  out.utilities = out.allocation.col(0).cwiseProduct(bids) - out.payments;
  return out;
}

SecondPriceMechanism::SecondPriceMechanism(int bidders, double reserve)
    : layout_{bidders, 1, 0, 0}, reserve_(reserve) {
  if (bidders < 1) throw ParameterError("second price needs at least one bidder");
  if (reserve < 0) throw ParameterError("reserve must be nonnegative");
}

BatchOutcome SecondPriceMechanism::evaluate(const Eigen::MatrixXd& inputs) const {
  check_inputs(inputs);
  BatchOutcome out = BatchOutcome::zeros(layout_, inputs.cols());
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    const auto r = run_second_price(inputs.col(c), reserve_);
    if (r.winner >= 0) out.allocation(r.winner, c) = 1.0;
    out.payments.col(c) = r.payments;
  }
  return out;
}

std::pair<BatchOutcome, Eigen::MatrixXd> SecondPriceMechanism::value_and_pullback(
    const Eigen::MatrixXd& inputs, const BatchOutcome& cot, MechanismGradient*) const {
  BatchOutcome out = evaluate(inputs);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(inputs.rows(), inputs.cols());
  const int n = layout_.bidders;
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    const Eigen::VectorXd bids = inputs.col(c);
    const Top2 t = top_two(bids);
    if (t.best < reserve_ || n < 2 || t.second <= reserve_) continue;
    // price = second-highest bid: find its (lowest) index among non-winners
    for (int i = 0; i < n; ++i) {
      if (i != t.winner && bids(i) == t.second) {
        d(i, c) = cot.payments(t.winner, c);
        break;
      }
    }
  }
  return {std::move(out), std::move(d)};
}

McEstimate optimal_revenue_mc(const DistributionSpec& dist, int n, std::size_t samples, std::uint64_t seed) {
  if (n < 1 || samples < 2) throw ParameterError("optimal_revenue_mc needs n >= 1 and samples >= 2");
  if (dist.kind != DistributionKind::uniform && dist.kind != DistributionKind::truncated_normal) {
    throw ParameterError("optimal_revenue_mc supports single-item uniform and truncated normal priors");
  }
  const double reserve = myerson_reserve(dist);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(dist.kind == DistributionKind::uniform ? dist.lo : 0.0,
                                           dist.kind == DistributionKind::uniform ? dist.hi : 1.0);
  Eigen::VectorXd bids(n);
  // Welford accumulation
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (int i = 0; i < n; ++i) {
      bids(i) = dist.kind == DistributionKind::uniform
                    ? u(rng)
                    : draw_truncated_normal(rng, dist.mu, dist.sigma, dist.lo, dist.hi);
    }
    const double rev = run_second_price(bids, reserve).payments.sum();
    const double delta = rev - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (rev - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

}  // namespace peauction::myerson
