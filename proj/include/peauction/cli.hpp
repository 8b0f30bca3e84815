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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "peauction/evaluation.hpp"
#include "peauction/training.hpp"
#include "peauction/valuations.hpp"

namespace peauction::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumeric = 2, kVerification = 3 };

/// Flat key=value configuration. Lines starting with '#' and blank lines are
/// ignored; later assignments win.
class ConfigMap {
 public:
  static ConfigMap parse(std::istream& in);
  static ConfigMap parse_file(const std::string& path);
  /// Parses one "key=value" assignment.
  void assign(const std::string& assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void merge(const ConfigMap& other);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string> values_;
};

/// (n, m, distribution) named settings, e.g. "2x1-uniform".
struct Setting {
  std::string name;
  int bidders = 0;
  int items = 0;
  std::string distribution;
};

const std::vector<Setting>& known_settings();
std::optional<Setting> find_setting(const std::string& name);

/// Preset names are "<setting>-desk" or "<setting>-full".
std::vector<std::string> preset_names();
ConfigMap preset(const std::string& name);

struct ExperimentConfig {
  std::string setting;
  int bidders = 0;
  int items = 0;
  DistributionSpec distribution;
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
  std::size_t test_samples = 0;
  /// Training profiles re-evaluated for the generalization error.
  std::size_t ge_samples = 0;
  TrainConfig train;
  EvalConfig eval;
  bool checkpoints = true;
  std::string output_dir;
  std::uint64_t seed = 1;

  Layout layout() const;
  /// "RegretNet" or "RegretNet-PE" depending on the training projection.
  std::string method() const;
};

/// Resolves a config (preset first when "preset" is set, then the explicit
/// keys). Throws ParameterError on unknown keys or inconsistent values.
ExperimentConfig resolve(const ConfigMap& cfg);

/// Test, training and validation samples use disjoint seed streams.
ValuationBatch sample_split(const ExperimentConfig& cfg, const std::string& split);

/// One results-table row per run directory containing metrics.json.
struct TableRow {
  std::string method;
  std::string setting;
  double revenue = 0.0;
  double regret = 0.0;
  std::optional<double> ge;
};
/// CSV with regret and GE scaled by 1e5.
void write_table(std::ostream& out, const std::vector<TableRow>& rows);
std::string format_scaled(double value);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace peauction::cli
