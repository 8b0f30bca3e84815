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
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace peauction {

/// A permutation of {0..k-1}: element i maps to perm[i].
using Permutation = std::vector<int>;

/// One bid/valuation profile: n x m values, optional contexts
/// (bidder_contexts: n x dx, item_contexts: m x dy).
struct ValuationProfile {
  Eigen::MatrixXd values;
  std::optional<Eigen::MatrixXd> bidder_contexts;
  std::optional<Eigen::MatrixXd> item_contexts;

  int bidders() const { return static_cast<int>(values.rows()); }
  int items() const { return static_cast<int>(values.cols()); }
};

enum class DistributionKind { uniform, truncated_normal, compound_a, compound_c };

/// Which prior to draw profiles from. Field use depends on `kind`:
/// truncated_normal uses mu/sigma/lo/hi; compound_a uses sigma/lo/hi;
/// compound_c uses context_dim.
struct DistributionSpec {
  DistributionKind kind = DistributionKind::uniform;
  double mu = 0.3;
  double sigma = 0.1;
  double lo = 0.0;
  double hi = 1.0;
  int context_dim = 1;

  std::string name() const;
  static DistributionSpec parse(const std::string& name);
};

struct ValuationBatch {
  std::vector<ValuationProfile> profiles;
  std::string distribution;
  std::uint64_t seed = 0;

  int bidders() const;
  int items() const;
  std::size_t size() const { return profiles.size(); }
  bool has_bidder_contexts() const;
  bool has_item_contexts() const;
};

ValuationBatch sample_uniform(int n, int m, std::size_t count, std::uint64_t seed);
ValuationBatch sample_truncated_normal(int n, int m, std::size_t count, double mu, double sigma,
                                       double lo, double hi, std::uint64_t seed);
/// x_i uniform on {1..5}; v_ij ~ N(x_i/6, sigma) truncated to [lo, hi].
ValuationBatch sample_compound_a(int n, int m, std::size_t count, std::uint64_t seed,
                                 double sigma = 0.1, double lo = 0.0, double hi = 1.0);
/// x_i, y_j uniform on [-1,1]^dim; v_ij ~ U[0, sigmoid(x_i . y_j)].
ValuationBatch sample_compound_c(int n, int m, int dim, std::size_t count, std::uint64_t seed);
ValuationBatch sample(const DistributionSpec& dist, int n, int m, std::size_t count,
                      std::uint64_t seed);

/// One truncated-normal draw by rejection.
double draw_truncated_normal(std::mt19937_64& rng, double mu, double sigma, double lo, double hi);

/// All k! permutations of {0..k-1} in lexicographic order; 1 <= k <= 8.
std::vector<Permutation> enumerate_permutations(int k);
Permutation inverse(const Permutation& perm);
Permutation compose(const Permutation& outer, const Permutation& inner);  // outer o inner
bool is_permutation(const Permutation& perm);

/// Profile with row i taken from row bidder_perm[i] and column j from column
/// item_perm[j]; contexts follow their rows/columns.
ValuationProfile permute(const ValuationProfile& profile, const Permutation& bidder_perm,
                         const Permutation& item_perm);

/// Every (bidder, item) permutation applied to every profile; profile-major,
/// group elements in lexicographic (bidder, item) order.
ValuationBatch symmetrize(const ValuationBatch& batch, std::size_t max_profiles = 50'000'000);

/// Column-per-profile matrix: flattened values (row-major, i*m+j), then
/// bidder contexts (row-major), then item contexts when `with_contexts`.
Eigen::MatrixXd to_inputs(const ValuationBatch& batch, bool with_contexts = false);

/// Batch CSV: header line "n,m,count,bidder_ctx_dim,item_ctx_dim", then one
/// row per profile with the flattened values followed by the contexts.
void write_batch_csv(std::ostream& out, const ValuationBatch& batch);
ValuationBatch read_batch_csv(std::istream& in);

}  // namespace peauction
