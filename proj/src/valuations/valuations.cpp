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

#include "peauction/valuations.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "peauction/errors.hpp"

namespace peauction {

namespace {

void check_shape(int n, int m, std::size_t count) {
  if (n < 1 || m < 1 || count < 1) throw ParameterError("n, m and count must be >= 1");
}

ValuationBatch make_batch(std::string name, std::uint64_t seed, std::size_t count) {
  ValuationBatch b;
  b.distribution = std::move(name);
  b.seed = seed;
  b.profiles.reserve(count);
  return b;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string DistributionSpec::name() const {
  switch (kind) {
    case DistributionKind::uniform:
      return "uniform";
    case DistributionKind::truncated_normal:
      return "normal";
    case DistributionKind::compound_a:
      return "compound_a";
    case DistributionKind::compound_c:
      return "compound_c";
  }
  return "unknown";
}

DistributionSpec DistributionSpec::parse(const std::string& name) {
  DistributionSpec d;
  if (name == "uniform") {
    d.kind = DistributionKind::uniform;
  } else if (name == "normal" || name == "truncated_normal") {
    d.kind = DistributionKind::truncated_normal;
  } else if (name == "compound_a") {
    d.kind = DistributionKind::compound_a;
  } else if (name == "compound_c") {
    d.kind = DistributionKind::compound_c;
  } else {
    throw ParameterError("unknown distribution '" + name + "'");
  }
  return d;
}

int ValuationBatch::bidders() const { return profiles.empty() ? 0 : profiles.front().bidders(); }
int ValuationBatch::items() const { return profiles.empty() ? 0 : profiles.front().items(); }
bool ValuationBatch::has_bidder_contexts() const {
  return !profiles.empty() && profiles.front().bidder_contexts.has_value();
}
bool ValuationBatch::has_item_contexts() const {
  return !profiles.empty() && profiles.front().item_contexts.has_value();
}

double draw_truncated_normal(std::mt19937_64& rng, double mu, double sigma, double lo, double hi) {
  if (!(sigma > 0)) throw ParameterError("truncated normal needs sigma > 0");
  if (!(lo < hi)) throw ParameterError("truncated normal needs lo < hi");
  std::normal_distribution<double> normal(mu, sigma);
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    const double x = normal(rng);
    if (x >= lo && x <= hi) return x;
  }
  throw NumericError("truncated normal rejection sampler: acceptance rate too low");
}

ValuationBatch sample_uniform(int n, int m, std::size_t count, std::uint64_t seed) {
  check_shape(n, m, count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto batch = make_batch("uniform", seed, count);
  for (std::size_t s = 0; s < count; ++s) {
    ValuationProfile p{Eigen::MatrixXd(n, m), std::nullopt, std::nullopt};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) p.values(i, j) = u(rng);
    }
    batch.profiles.push_back(std::move(p));
  }
  return batch;
}

ValuationBatch sample_truncated_normal(int n, int m, std::size_t count, double mu, double sigma,
                                       double lo, double hi, std::uint64_t seed) {
  check_shape(n, m, count);
  if (!(sigma > 0)) throw ParameterError("truncated normal needs sigma > 0");
  if (!(lo < hi)) throw ParameterError("truncated normal needs lo < hi");
  std::mt19937_64 rng(seed);
  auto batch = make_batch("normal", seed, count);
  for (std::size_t s = 0; s < count; ++s) {
    ValuationProfile p{Eigen::MatrixXd(n, m), std::nullopt, std::nullopt};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) p.values(i, j) = draw_truncated_normal(rng, mu, sigma, lo, hi);
    }
    batch.profiles.push_back(std::move(p));
  }
  return batch;
}

ValuationBatch sample_compound_a(int n, int m, std::size_t count, std::uint64_t seed, double sigma,
                                 double lo, double hi) {
  check_shape(n, m, count);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> level(1, 5);
  auto batch = make_batch("compound_a", seed, count);
  for (std::size_t s = 0; s < count; ++s) {
    ValuationProfile p{Eigen::MatrixXd(n, m), Eigen::MatrixXd(n, 1), std::nullopt};
    for (int i = 0; i < n; ++i) {
      const int x = level(rng);
      (*p.bidder_contexts)(i, 0) = x;
      for (int j = 0; j < m; ++j) p.values(i, j) = draw_truncated_normal(rng, x / 6.0, sigma, lo, hi);
    }
    batch.profiles.push_back(std::move(p));
  }
  return batch;
}

ValuationBatch sample_compound_c(int n, int m, int dim, std::size_t count, std::uint64_t seed) {
  check_shape(n, m, count);
  if (dim < 1) throw ParameterError("compound_c needs context dim >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ctx(-1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto batch = make_batch("compound_c", seed, count);
  for (std::size_t s = 0; s < count; ++s) {
    ValuationProfile p{Eigen::MatrixXd(n, m), Eigen::MatrixXd(n, dim), Eigen::MatrixXd(m, dim)};
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < dim; ++d) (*p.bidder_contexts)(i, d) = ctx(rng);
    }
    for (int j = 0; j < m; ++j) {
      for (int d = 0; d < dim; ++d) (*p.item_contexts)(j, d) = ctx(rng);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        const double dot = p.bidder_contexts->row(i).dot(p.item_contexts->row(j));
        p.values(i, j) = u(rng) / (1.0 + std::exp(-dot));
      }
    }
    batch.profiles.push_back(std::move(p));
  }
  return batch;
}

ValuationBatch sample(const DistributionSpec& dist, int n, int m, std::size_t count,
                      std::uint64_t seed) {
  switch (dist.kind) {
    case DistributionKind::uniform:
      return sample_uniform(n, m, count, seed);
    case DistributionKind::truncated_normal:
      return sample_truncated_normal(n, m, count, dist.mu, dist.sigma, dist.lo, dist.hi, seed);
    case DistributionKind::compound_a:
      return sample_compound_a(n, m, count, seed, dist.sigma, dist.lo, dist.hi);
    case DistributionKind::compound_c:
      return sample_compound_c(n, m, dist.context_dim, count, seed);
  }
  throw ParameterError("unknown distribution kind");
}

std::vector<Permutation> enumerate_permutations(int k) {
  if (k < 1 || k > 8) throw ParameterError("enumerate_permutations: k must be in [1, 8]");
  Permutation p(static_cast<std::size_t>(k));
  std::iota(p.begin(), p.end(), 0);
  std::vector<Permutation> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

Permutation inverse(const Permutation& perm) {
  Permutation inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  return inv;
}

Permutation compose(const Permutation& outer, const Permutation& inner) {
  if (outer.size() != inner.size()) throw ShapeError("compose: size mismatch");
  Permutation out(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) out[i] = outer[static_cast<std::size_t>(inner[i])];
  return out;
}

bool is_permutation(const Permutation& perm) {
  std::vector<bool> seen(perm.size(), false);
  for (int v : perm) {
    if (v < 0 || static_cast<std::size_t>(v) >= perm.size() || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

ValuationProfile permute(const ValuationProfile& profile, const Permutation& bidder_perm,
                         const Permutation& item_perm) {
  const int n = profile.bidders();
  const int m = profile.items();
  if (static_cast<int>(bidder_perm.size()) != n || static_cast<int>(item_perm.size()) != m) {
    throw ShapeError("permute: permutation sizes do not match profile");
  }
  if (!is_permutation(bidder_perm) || !is_permutation(item_perm)) throw ParameterError("permute: not a permutation");
  ValuationProfile out{Eigen::MatrixXd(n, m), std::nullopt, std::nullopt};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) out.values(i, j) = profile.values(bidder_perm[i], item_perm[j]);
  }
  if (profile.bidder_contexts) {
    out.bidder_contexts = Eigen::MatrixXd(n, profile.bidder_contexts->cols());
    for (int i = 0; i < n; ++i) out.bidder_contexts->row(i) = profile.bidder_contexts->row(bidder_perm[i]);
  }
  if (profile.item_contexts) {
    out.item_contexts = Eigen::MatrixXd(m, profile.item_contexts->cols());
    for (int j = 0; j < m; ++j) out.item_contexts->row(j) = profile.item_contexts->row(item_perm[j]);
  }
  return out;
}

ValuationBatch symmetrize(const ValuationBatch& batch, std::size_t max_profiles) {
  if (batch.profiles.empty()) return batch;
  const auto bidder_perms = enumerate_permutations(batch.bidders());
  const auto item_perms = enumerate_permutations(batch.items());
  const std::size_t group = bidder_perms.size() * item_perms.size();
  if (group > max_profiles / batch.size()) {
    throw BudgetError("symmetrize: " + std::to_string(batch.size()) + " x " + std::to_string(group) +
                      " profiles exceeds the budget");
  }
  ValuationBatch out;
  out.distribution = batch.distribution;
  out.seed = batch.seed;
  out.profiles.reserve(batch.size() * group);
  for (const auto& p : batch.profiles) {
    for (const auto& bp : bidder_perms) {
      for (const auto& ip : item_perms) out.profiles.push_back(permute(p, bp, ip));
    }
  }
  return out;
}

Eigen::MatrixXd to_inputs(const ValuationBatch& batch, bool with_contexts) {
  if (batch.profiles.empty()) return {};
  const int n = batch.bidders();
  const int m = batch.items();
  const auto& first = batch.profiles.front();
  const Eigen::Index dx = (with_contexts && first.bidder_contexts) ? first.bidder_contexts->cols() : 0;
  const Eigen::Index dy = (with_contexts && first.item_contexts) ? first.item_contexts->cols() : 0;
  Eigen::MatrixXd out(n * m + n * dx + m * dy, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& p = batch.profiles[s];
    if (p.bidders() != n || p.items() != m) throw ShapeError("to_inputs: profiles differ in shape");
    const auto col = static_cast<Eigen::Index>(s);
    Eigen::Index r = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) out(r++, col) = p.values(i, j);
    }
    for (int i = 0; i < n && dx > 0; ++i) {
      for (Eigen::Index d = 0; d < dx; ++d) out(r++, col) = (*p.bidder_contexts)(i, d);
    }
    for (int j = 0; j < m && dy > 0; ++j) {
      for (Eigen::Index d = 0; d < dy; ++d) out(r++, col) = (*p.item_contexts)(j, d);
    }
  }
  return out;
}

void write_batch_csv(std::ostream& out, const ValuationBatch& batch) {
  const auto dx = batch.has_bidder_contexts() ? batch.profiles.front().bidder_contexts->cols() : 0;
  const auto dy = batch.has_item_contexts() ? batch.profiles.front().item_contexts->cols() : 0;
  out << batch.bidders() << ',' << batch.items() << ',' << batch.size() << ',' << dx << ',' << dy << '\n';
  const Eigen::MatrixXd inputs = to_inputs(batch, true);
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    for (Eigen::Index r = 0; r < inputs.rows(); ++r) out << (r ? "," : "") << format_double(inputs(r, c));
    out << '\n';
  }
}

ValuationBatch read_batch_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParameterError("batch csv: missing header");
  std::vector<long long> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(std::stoll(cell));
  }
  if (header.size() != 5) throw ParameterError("batch csv: header must be n,m,count,dx,dy");
  const int n = static_cast<int>(header[0]);
  const int m = static_cast<int>(header[1]);
  const auto count = static_cast<std::size_t>(header[2]);
  const auto dx = static_cast<Eigen::Index>(header[3]);
  const auto dy = static_cast<Eigen::Index>(header[4]);
  if (n < 1 || m < 1 || dx < 0 || dy < 0) throw ParameterError("batch csv: bad header");
  ValuationBatch batch;
  batch.distribution = "csv";
  batch.profiles.reserve(count);
  const Eigen::Index width = n * m + n * dx + m * dy;
  for (std::size_t s = 0; s < count; ++s) {
    if (!std::getline(in, line)) throw ParameterError("batch csv: fewer rows than count");
    std::vector<double> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(std::stod(cell));
    if (static_cast<Eigen::Index>(cells.size()) != width) throw ParameterError("batch csv: wrong row width");
    ValuationProfile p{Eigen::MatrixXd(n, m), std::nullopt, std::nullopt};
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) p.values(i, j) = cells[k++];
    }
    if (dx > 0) {
      p.bidder_contexts = Eigen::MatrixXd(n, dx);
      for (int i = 0; i < n; ++i) {
        for (Eigen::Index d = 0; d < dx; ++d) (*p.bidder_contexts)(i, d) = cells[k++];
      }
    }
    if (dy > 0) {
      p.item_contexts = Eigen::MatrixXd(m, dy);
      for (int j = 0; j < m; ++j) {
        for (Eigen::Index d = 0; d < dy; ++d) (*p.item_contexts)(j, d) = cells[k++];
      }
    }
    if (p.values.minCoeff() < 0 || !p.values.allFinite()) throw ParameterError("batch csv: invalid value");
    batch.profiles.push_back(std::move(p));
  }
  return batch;
}

}  // namespace peauction
