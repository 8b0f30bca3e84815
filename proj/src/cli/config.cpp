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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "peauction/cli.hpp"
#include "peauction/errors.hpp"
#include "peauction/parallel.hpp"

namespace peauction::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "preset", "setting", "bidders", "items", "distribution", "normal_mu", "normal_sigma", "context_dim",
      "train_samples", "validation_samples", "test_samples", "ge_samples", "batch_size", "iterations",
      "misreport_steps", "misreport_lr", "learning_rate", "lambda_period", "lambda_init", "rho_initial",
      "rho_increment", "rho_period", "projection", "projection_bidders", "projection_items", "early_stop_regret",
      "validation_steps", "max_epochs", "hidden_width", "hidden_layers", "test_misreport_steps",
      "test_misreport_inits", "test_misreport_lr", "log_interval", "checkpoints", "seed", "workers", "output_dir"};
  return keys;
}

long parse_long(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || v != std::floor(v)) throw std::invalid_argument("not an integer");
    return static_cast<long>(v);
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' expects an integer, got '" + text + "'");
  }
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' expects a number, got '" + text + "'");
  }
}

std::size_t positive_count(const ConfigMap& cfg, const std::string& key, long fallback) {
  const long v = cfg.get_long(key, fallback);
  if (v < 0) throw ParameterError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

DistributionSpec distribution_from(const ConfigMap& cfg, std::string name) {
  std::replace(name.begin(), name.end(), '-', '_');
  DistributionSpec d = DistributionSpec::parse(name);
  d.mu = cfg.get_double("normal_mu", d.mu);
  d.sigma = cfg.get_double("normal_sigma", d.sigma);
  d.context_dim = static_cast<int>(cfg.get_long("context_dim", d.context_dim));
  return d;
}

}  // namespace

ConfigMap ConfigMap::parse(std::istream& in) {
  ConfigMap cfg;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    cfg.assign(t);
  }
  return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config file " + path);
  return parse(in);
}

void ConfigMap::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ParameterError("expected key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ParameterError("empty key in '" + assignment + "'");
  values_[key] = trim(assignment.substr(eq + 1));
}

void ConfigMap::merge(const ConfigMap& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string ConfigMap::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(key, it->second);
}

long ConfigMap::get_long(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_long(key, it->second);
}

void ConfigMap::write(std::ostream& out) const {
  for (const auto& [k, v] : values_) out << k << '=' << v << '\n';
}

const std::vector<Setting>& known_settings() {
  static const std::vector<Setting> settings{
      {"2x1-uniform", 2, 1, "uniform"},    {"3x1-uniform", 3, 1, "uniform"},       {"5x1-uniform", 5, 1, "uniform"},
      {"1x2-uniform", 1, 2, "uniform"},    {"2x2-uniform", 2, 2, "uniform"},       {"2x5-uniform", 2, 5, "uniform"},
      {"5x3-uniform", 5, 3, "uniform"},    {"2x1-normal", 2, 1, "normal"},         {"3x1-normal", 3, 1, "normal"},
      {"2x2-normal", 2, 2, "normal"},      {"2x5-normal", 2, 5, "normal"},         {"5x3-normal", 5, 3, "normal"},
      {"3x1-compound-a", 3, 1, "compound-a"}, {"5x1-compound-a", 5, 1, "compound-a"},
      {"3x1-compound-c", 3, 1, "compound-c"}, {"5x1-compound-c", 5, 1, "compound-c"},
  };
  return settings;
}

std::optional<Setting> find_setting(const std::string& name) {
  for (const auto& s : known_settings()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& s : known_settings()) {
    names.push_back(s.name + "-desk");
    names.push_back(s.name + "-full");
  }
  return names;
}

ConfigMap preset(const std::string& name) {
  const auto dash = name.rfind('-');
  const std::string scale = dash == std::string::npos ? "" : name.substr(dash + 1);
  const auto setting = dash == std::string::npos ? std::nullopt : find_setting(name.substr(0, dash));
  if (!setting || (scale != "desk" && scale != "full")) throw ParameterError("unknown preset '" + name + "'");
  ConfigMap cfg;
  cfg.set("setting", setting->name);
  if (scale == "desk") {
    // Sized for a single CPU core.
    cfg.set("train_samples", "50000");
    cfg.set("validation_samples", "1000");
    cfg.set("test_samples", "5000");
    cfg.set("iterations", "15000");
    cfg.set("hidden_width", "32");
    cfg.set("hidden_layers", "3");
    cfg.set("test_misreport_inits", "100");
    cfg.set("test_misreport_steps", "200");
  } else {
    cfg.set("train_samples", "640000");
    cfg.set("validation_samples", "5000");
    cfg.set("iterations", "750000");  // 150 epochs of 5000 batches
    cfg.set("hidden_width", "100");
    cfg.set("hidden_layers", "3");
    cfg.set("test_misreport_steps", "2000");
    std::string test = "5000";
    std::string inits = "1000";
    if (setting->bidders == 2 && setting->items == 5) {
      test = "3840";
      inits = "150";
    } else if (setting->bidders == 5 && setting->items == 3) {
      test = "1280";
      inits = "120";
    }
    cfg.set("test_samples", test);
    cfg.set("test_misreport_inits", inits);
  }
  return cfg;
}

Layout ExperimentConfig::layout() const {
  switch (distribution.kind) {
    case DistributionKind::compound_a:
      return {bidders, items, 1, 0};
    case DistributionKind::compound_c:
      return {bidders, items, distribution.context_dim, distribution.context_dim};
    default:
      return {bidders, items, 0, 0};
  }
}

std::string ExperimentConfig::method() const { return train.projection ? "RegretNet-PE" : "RegretNet"; }

ExperimentConfig resolve(const ConfigMap& explicit_cfg) {
  ConfigMap cfg;
  if (explicit_cfg.has("preset")) cfg = preset(explicit_cfg.get("preset", ""));
  cfg.merge(explicit_cfg);
  for (const auto& [k, v] : cfg.values()) {
    if (!known_keys().count(k)) throw ParameterError("unknown config key '" + k + "'");
  }
  ExperimentConfig ex;
  ex.setting = cfg.get("setting", "");
  std::string dist = cfg.get("distribution", "");
  if (!ex.setting.empty()) {
    const auto s = find_setting(ex.setting);
    if (!s && !(cfg.has("bidders") && cfg.has("items") && cfg.has("distribution"))) {
      throw ParameterError("unknown setting '" + ex.setting + "' (give bidders, items and distribution explicitly)");
    }
    if (s) {
      ex.bidders = s->bidders;
      ex.items = s->items;
      if (dist.empty()) dist = s->distribution;
    }
  }
  ex.bidders = static_cast<int>(cfg.get_long("bidders", ex.bidders));
  ex.items = static_cast<int>(cfg.get_long("items", ex.items));
  if (dist.empty()) dist = "uniform";
  if (ex.bidders <= 0 || ex.items <= 0) throw ParameterError("config needs a setting or positive bidders and items");
  if (ex.setting.empty()) ex.setting = std::to_string(ex.bidders) + "x" + std::to_string(ex.items) + "-" + dist;
  ex.distribution = distribution_from(cfg, dist);

  ex.train_samples = positive_count(cfg, "train_samples", 50000);
  ex.validation_samples = positive_count(cfg, "validation_samples", 1000);
  ex.test_samples = positive_count(cfg, "test_samples", 5000);
  ex.ge_samples = positive_count(cfg, "ge_samples", static_cast<long>(std::min(ex.test_samples, ex.train_samples)));
  ex.seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
  const int workers = static_cast<int>(cfg.get_long("workers", default_workers()));

  TrainConfig& t = ex.train;
  t.arch.hidden_width = static_cast<int>(cfg.get_long("hidden_width", t.arch.hidden_width));
  t.arch.hidden_layers = static_cast<int>(cfg.get_long("hidden_layers", t.arch.hidden_layers));
  t.batch_size = static_cast<int>(cfg.get_long("batch_size", t.batch_size));
  t.total_iterations = cfg.get_long("iterations", t.total_iterations);
  t.misreport_steps = static_cast<int>(cfg.get_long("misreport_steps", t.misreport_steps));
  t.misreport_lr = cfg.get_double("misreport_lr", t.misreport_lr);
  t.learning_rate = cfg.get_double("learning_rate", t.learning_rate);
  t.lambda_period = static_cast<int>(cfg.get_long("lambda_period", t.lambda_period));
  t.lambda_init = cfg.get_double("lambda_init", t.lambda_init);
  t.rho.initial = cfg.get_double("rho_initial", t.rho.initial);
  t.rho.increment = cfg.get_double("rho_increment", t.rho.increment);
  t.rho.period = static_cast<int>(cfg.get_long("rho_period", t.rho.period));
  t.early_stop_regret = cfg.get_double("early_stop_regret", t.early_stop_regret);
  t.validation_steps = static_cast<int>(cfg.get_long("validation_steps", t.validation_steps));
  t.max_epochs = static_cast<int>(cfg.get_long("max_epochs", t.max_epochs));
  t.log_interval = static_cast<int>(cfg.get_long("log_interval", t.log_interval));
  t.seed = ex.seed;
  t.workers = workers;
  const std::string proj = cfg.get("projection", "none");
  if (proj != "none") {
    t.projection = ProjectionSpec::parse(proj, cfg.get("projection_bidders", ""), cfg.get("projection_items", ""));
    t.projection->validate(ex.bidders, ex.items);
  }
  t.validate();

  MisreportConfig& m = ex.eval.misreport;
  m.steps = static_cast<int>(cfg.get_long("test_misreport_steps", m.steps));
  m.num_inits = static_cast<int>(cfg.get_long("test_misreport_inits", m.num_inits));
  m.learning_rate = cfg.get_double("test_misreport_lr", m.learning_rate);
  m.seed = ex.seed + 17;
  m.workers = workers;
  m.validate();

  ex.checkpoints = cfg.get_long("checkpoints", 1) != 0;
  ex.output_dir = cfg.get("output_dir", "");
  if (ex.train_samples < static_cast<std::size_t>(t.batch_size)) {
    throw ParameterError("train_samples must be at least batch_size");
  }
  if (ex.test_samples == 0) throw ParameterError("test_samples must be positive");
  return ex;
}

ValuationBatch sample_split(const ExperimentConfig& cfg, const std::string& split) {
  std::size_t count = 0;
  std::uint64_t stream = 0;
  if (split == "train") {
    count = cfg.train_samples;
    stream = 1;
  } else if (split == "validation") {
    count = cfg.validation_samples;
    stream = 2;
  } else if (split == "test") {
    count = cfg.test_samples;
    stream = 3;
  } else {
    throw ParameterError("unknown data split '" + split + "'");
  }
  return sample(cfg.distribution, cfg.bidders, cfg.items, count, cfg.seed * 1000003ULL + stream);
}

namespace {

// Three significant digits, without switching to exponent notation.
std::string three_digits(double v) {
  std::ostringstream s;
  if (std::abs(v) >= 100.0) {
    s << std::fixed << std::setprecision(0) << v;
  } else if (v != 0.0 && std::abs(v) < 1e-3) {
    s << std::fixed << std::setprecision(2 - static_cast<int>(std::floor(std::log10(std::abs(v))))) << v;
  } else {
    s << std::setprecision(3) << v;
  }
  return s.str();
}

}  // namespace

std::string format_scaled(double value) { return three_digits(value * 1e5); }

void write_table(std::ostream& out, const std::vector<TableRow>& rows) {
  out << "method,setting,revenue,regret_x1e5,ge_x1e5\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.setting << ',' << three_digits(r.revenue) << ',' << format_scaled(r.regret) << ','
        << (r.ge ? format_scaled(*r.ge) : "-") << '\n';
  }
}

}  // namespace peauction::cli
