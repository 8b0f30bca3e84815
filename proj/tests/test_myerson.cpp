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

#include <cmath>
#include <numbers>

#include "peauction/errors.hpp"
#include "peauction/myerson.hpp"
#include "test_util.hpp"

using namespace peauction;
using namespace peauction::myerson;

namespace {

// n * integral over [r, 1] of phi(v) F(v)^(n-1) f(v) dv by Simpson's rule.
double quadrature_revenue(const DistributionSpec& d, int n) {
  const auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  const double z0 = Phi((d.lo - d.mu) / d.sigma);
  const double mass = Phi((d.hi - d.mu) / d.sigma) - z0;
  const auto F = [&](double v) { return (Phi((v - d.mu) / d.sigma) - z0) / mass; };
  const auto f = [&](double v) {
    const double z = (v - d.mu) / d.sigma;
    return std::exp(-0.5 * z * z) / (d.sigma * std::sqrt(2.0 * std::numbers::pi) * mass);
  };
  const auto g = [&](double v) {
    const double phi = v - (1.0 - F(v)) / f(v);
    return phi > 0 ? phi * std::pow(F(v), n - 1) * f(v) : 0.0;
  };
  const int K = 20000;
  const double h = (d.hi - d.lo) / K;
  double s = g(d.lo) + g(d.hi);
  for (int k = 1; k < K; ++k) s += g(d.lo + k * h) * (k % 2 ? 4.0 : 2.0);
  return n * s * h / 3.0;
}

double uniform_closed_form(int n) {
  return 2.0 * n / (n + 1.0) * (1.0 - std::pow(0.5, n + 1)) - (1.0 - std::pow(0.5, n));
}

}  // namespace

TEST_CASE("uniform reserve and closed-form revenue") {
  CHECK(myerson_reserve_uniform01() == 0.5);
  CHECK(myerson_reserve(DistributionSpec{}) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(uniform_closed_form(2) == doctest::Approx(5.0 / 12.0));
  for (int n : {1, 2, 3, 5}) {
    const McEstimate mc = optimal_revenue_mc(DistributionSpec{}, n, 200000, 11);
    CHECK(std::abs(mc.mean - uniform_closed_form(n)) < 4.0 * mc.std_error);
    CHECK(mc.samples == 200000);
  }
}

TEST_CASE("virtual values") {
  DistributionSpec u;
  CHECK(virtual_value(u, 0.75) == doctest::Approx(0.5));
  u.lo = 0.2;
  u.hi = 0.6;
  CHECK(virtual_value(u, 0.5) == doctest::Approx(0.4));
  CHECK(myerson_reserve(u) == doctest::Approx(0.3).epsilon(1e-6));
  DistributionSpec normal = DistributionSpec::parse("normal");
  const double r = myerson_reserve(normal);
  CHECK(std::abs(virtual_value(normal, r)) < 1e-6);
  CHECK(virtual_value(normal, r + 0.01) > 0.0);
  normal.sigma = 0.0;
  CHECK_THROWS_AS(virtual_value(normal, 0.3), ParameterError);
  CHECK_THROWS_AS(virtual_value(DistributionSpec::parse("compound_a"), 0.3), ParameterError);
}

TEST_CASE("truncated normal revenue matches quadrature") {
  const DistributionSpec normal = DistributionSpec::parse("normal");
  for (int n : {2, 3}) {
    const McEstimate mc = optimal_revenue_mc(normal, n, 200000, 5);
    CHECK(std::abs(mc.mean - quadrature_revenue(normal, n)) < 4.0 * mc.std_error);
  }
}

TEST_CASE("second price with reserve") {
  SecondPriceResult r = run_second_price(Eigen::Vector3d(0.6, 0.9, 0.7), 0.5);
  CHECK(r.winner == 1);
  CHECK(r.payments(1) == doctest::Approx(0.7));
  CHECK(r.payments.sum() == doctest::Approx(0.7));
  r = run_second_price(Eigen::Vector3d(0.6, 0.2, 0.1), 0.5);
  CHECK(r.winner == 0);
  CHECK(r.payments(0) == doctest::Approx(0.5));
  r = run_second_price(Eigen::Vector2d(0.4, 0.3), 0.5);
  CHECK(r.winner == -1);
  CHECK(r.payments.sum() == 0.0);
  r = run_second_price(Eigen::Vector2d(0.8, 0.8), 0.5);
  CHECK(r.winner == 0);
  CHECK(r.payments(0) == doctest::Approx(0.8));
  const AuctionOutcome o = run_second_price_outcome(Eigen::Vector2d(0.8, 0.8), 0.5);
  CHECK(o.allocation(0, 0) == 1.0);
  CHECK(o.utilities(0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(SecondPriceMechanism(2, -0.1), ParameterError);
}

TEST_CASE("second price mechanism agrees with the scalar rule and its a.e. derivative") {
  const SecondPriceMechanism sp(3, 0.5);
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd x = testutil::uniform_matrix(3, 200, rng);
  const BatchOutcome out = sp.evaluate(x);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const SecondPriceResult r = run_second_price(x.col(c), 0.5);
    CHECK(out.payments.col(c) == r.payments);
  }
  const BatchOutcome cot = testutil::random_cotangent(sp.layout(), 200, rng);
  const Eigen::MatrixXd dx = sp.value_and_pullback(x, cot, nullptr).second;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::MatrixXd up = x, down = x;
    up.data()[k] += 1e-7;
    down.data()[k] -= 1e-7;
    const double fd = (testutil::pairing(sp.evaluate(up), cot) - testutil::pairing(sp.evaluate(down), cot)) / 2e-7;
    CHECK(testutil::relative_error(dx.data()[k], fd, 1e-3) < 1e-5);
  }
}

TEST_CASE("Monte Carlo argument checks") {
  CHECK_THROWS_AS(optimal_revenue_mc(DistributionSpec{}, 0, 100, 1), ParameterError);
  CHECK_THROWS_AS(optimal_revenue_mc(DistributionSpec::parse("compound_c"), 2, 100, 1), ParameterError);
  const McEstimate a = optimal_revenue_mc(DistributionSpec{}, 2, 1000, 3);
  const McEstimate b = optimal_revenue_mc(DistributionSpec{}, 2, 1000, 3);
  CHECK(a.mean == b.mean);
}
