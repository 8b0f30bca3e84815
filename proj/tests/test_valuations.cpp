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

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "peauction/errors.hpp"
#include "peauction/valuations.hpp"

using namespace peauction;

TEST_CASE("uniform samples lie in the unit box and are seed deterministic") {
  const ValuationBatch a = sample_uniform(3, 2, 500, 9);
  const ValuationBatch b = sample_uniform(3, 2, 500, 9);
  const ValuationBatch c = sample_uniform(3, 2, 500, 10);
  REQUIRE(a.size() == 500);
  CHECK(a.bidders() == 3);
  CHECK(a.items() == 2);
  double mean = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    CHECK(a.profiles[s].values.minCoeff() >= 0.0);
    CHECK(a.profiles[s].values.maxCoeff() <= 1.0);
    CHECK(a.profiles[s].values == b.profiles[s].values);
    mean += a.profiles[s].values.sum() / 6.0;
  }
  CHECK(mean / 500.0 == doctest::Approx(0.5).epsilon(0.05));
  CHECK(a.profiles[0].values != c.profiles[0].values);
}

TEST_CASE("truncated normal respects its support and mean") {
  const ValuationBatch batch = sample_truncated_normal(2, 1, 20000, 0.3, 0.1, 0.0, 1.0, 4);
  double mean = 0.0;
  for (const auto& p : batch.profiles) {
    CHECK(p.values.minCoeff() >= 0.0);
    CHECK(p.values.maxCoeff() <= 1.0);
    mean += p.values.mean();
  }
  // Truncation at 0 lifts the mean of N(0.3, 0.1) by sigma*phi(3)/Phi(3) = 0.00044.
  CHECK(mean / 20000.0 == doctest::Approx(0.3004).epsilon(0.01));
  CHECK_THROWS_AS(sample_truncated_normal(2, 1, 5, 0.3, 0.0, 0.0, 1.0, 1), ParameterError);
}

TEST_CASE("compound A draws a bidder level and values around level/6") {
  const ValuationBatch batch = sample_compound_a(3, 2, 2000, 7);
  REQUIRE(batch.has_bidder_contexts());
  CHECK_FALSE(batch.has_item_contexts());
  std::set<int> levels;
  for (const auto& p : batch.profiles) {
    for (int i = 0; i < 3; ++i) {
      const double x = (*p.bidder_contexts)(i, 0);
      levels.insert(static_cast<int>(x));
      CHECK(x == std::round(x));
      CHECK(p.values.row(i).minCoeff() >= 0.0);
    }
  }
  CHECK(levels == std::set<int>{1, 2, 3, 4, 5});
}

TEST_CASE("compound C values are bounded by the context sigmoid") {
  const ValuationBatch batch = sample_compound_c(2, 3, 2, 500, 3);
  REQUIRE(batch.has_bidder_contexts());
  REQUIRE(batch.has_item_contexts());
  for (const auto& p : batch.profiles) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double cap = 1.0 / (1.0 + std::exp(-p.bidder_contexts->row(i).dot(p.item_contexts->row(j))));
        CHECK(p.values(i, j) >= 0.0);
        CHECK(p.values(i, j) <= cap);
      }
    }
  }
  CHECK_THROWS_AS(sample_compound_c(2, 3, 0, 5, 3), ParameterError);
}

TEST_CASE("distribution names round trip") {
  for (const char* name : {"uniform", "normal", "compound_a", "compound_c"}) {
    CHECK(DistributionSpec::parse(name).name() == name);
  }
  CHECK_THROWS_AS(DistributionSpec::parse("lognormal"), ParameterError);
  CHECK_THROWS_AS(sample_uniform(0, 1, 3, 1), ParameterError);
}

TEST_CASE("permutations are enumerated lexicographically") {
  const auto p3 = enumerate_permutations(3);
  REQUIRE(p3.size() == 6);
  CHECK(p3.front() == Permutation{0, 1, 2});
  CHECK(p3[1] == Permutation{0, 2, 1});
  CHECK(p3.back() == Permutation{2, 1, 0});
  CHECK(std::is_sorted(p3.begin(), p3.end()));
  CHECK(enumerate_permutations(1).size() == 1);
  CHECK(enumerate_permutations(5).size() == 120);
  CHECK_THROWS_AS(enumerate_permutations(0), ParameterError);
  CHECK_THROWS_AS(enumerate_permutations(9), ParameterError);
}

TEST_CASE("inverse and compose behave as group operations") {
  for (const auto& p : enumerate_permutations(4)) {
    CHECK(is_permutation(p));
    CHECK(compose(p, inverse(p)) == Permutation{0, 1, 2, 3});
    CHECK(compose(inverse(p), p) == Permutation{0, 1, 2, 3});
  }
  const Permutation a{1, 2, 0};
  const Permutation b{0, 2, 1};
  // (a o b)[i] = a[b[i]]
  CHECK(compose(a, b) == Permutation{1, 0, 2});
  CHECK_FALSE(is_permutation({0, 0, 1}));
  CHECK_FALSE(is_permutation({0, 3}));
}

TEST_CASE("permute moves rows, columns and their contexts") {
  ValuationProfile p{Eigen::MatrixXd(2, 3), Eigen::MatrixXd(2, 1), Eigen::MatrixXd(3, 1)};
  p.values << 1, 2, 3, 4, 5, 6;
  *p.bidder_contexts << 10, 20;
  *p.item_contexts << 7, 8, 9;
  const ValuationProfile q = permute(p, {1, 0}, {2, 0, 1});
  Eigen::MatrixXd expected(2, 3);
  expected << 6, 4, 5, 3, 1, 2;
  CHECK(q.values == expected);
  CHECK((*q.bidder_contexts)(0, 0) == 20);
  CHECK((*q.item_contexts)(0, 0) == 9);
  CHECK_THROWS_AS(permute(p, {0, 0}, {0, 1, 2}), ParameterError);
}

TEST_CASE("symmetrize applies every group element to every profile") {
  const ValuationBatch batch = sample_uniform(2, 2, 3, 1);
  const ValuationBatch sym = symmetrize(batch);
  REQUIRE(sym.size() == 3 * 2 * 2);
  CHECK(sym.profiles[0].values == batch.profiles[0].values);
  Eigen::MatrixXd swapped = batch.profiles[1].values.colwise().reverse();
  CHECK(sym.profiles[4 + 2].values == swapped);
  CHECK_THROWS(symmetrize(batch, 11));
}

TEST_CASE("inputs are flattened row-major with contexts appended") {
  ValuationBatch batch;
  ValuationProfile p{Eigen::MatrixXd(2, 2), Eigen::MatrixXd(2, 1), std::nullopt};
  p.values << 0.1, 0.2, 0.3, 0.4;
  *p.bidder_contexts << 5, 6;
  batch.profiles.push_back(p);
  const Eigen::MatrixXd with = to_inputs(batch, true);
  REQUIRE(with.rows() == 6);
  CHECK(with(1, 0) == 0.2);
  CHECK(with(2, 0) == 0.3);
  CHECK(with(5, 0) == 6);
  CHECK(to_inputs(batch, false).rows() == 4);
}

TEST_CASE("batch CSV round trips exactly") {
  const ValuationBatch batch = sample_compound_c(2, 2, 2, 4, 12);
  std::stringstream s;
  write_batch_csv(s, batch);
  const ValuationBatch back = read_batch_csv(s);
  REQUIRE(back.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(back.profiles[k].values == batch.profiles[k].values);
    CHECK(*back.profiles[k].item_contexts == *batch.profiles[k].item_contexts);
  }
  std::stringstream bad("2,2,1,0,0\n0.1,0.2\n");
  CHECK_THROWS(read_batch_csv(bad));
}
