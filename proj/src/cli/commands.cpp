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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "peauction/cli.hpp"
#include "peauction/errors.hpp"
#include "peauction/myerson.hpp"
#include "peauction/parallel.hpp"
#include "peauction/theoremlab.hpp"

namespace peauction::cli {

namespace fs = std::filesystem;

namespace {

struct ConfigArgs {
  std::string file;
  std::string preset_name;
  std::vector<std::string> assignments;

  ConfigMap load() const {
    ConfigMap cfg;
    if (!preset_name.empty()) cfg.set("preset", preset_name);
    if (!file.empty()) cfg.merge(ConfigMap::parse_file(file));
    for (const auto& a : assignments) cfg.assign(a);
    return cfg;
  }
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("-c,--config", args.file, "key=value config file");
  cmd->add_option("-p,--preset", args.preset_name, "named preset, e.g. 2x1-uniform-desk");
  cmd->add_option("-s,--set", args.assignments, "override a config key (key=value), repeatable");
}

Eigen::MatrixXd inputs_for(const ExperimentConfig& ex, const ValuationBatch& batch) {
  return to_inputs(batch, ex.layout().bidder_context_dim > 0 || ex.layout().item_context_dim > 0);
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void prepare_run_dir(const fs::path& dir) {
  fs::create_directories(dir);
  if (fs::exists(dir / "model.txt") || fs::exists(dir / "metrics.json")) {
    throw ParameterError("run directory " + dir.string() + " already holds results; outputs are never overwritten");
  }
}

void report_warnings(const Metrics& m, std::ostream& err) {
  for (const auto& w : m.warnings) err << "warning: " << w << '\n';
}

int cmd_train(const ConfigArgs& args, const std::string& out_override, std::ostream& out, std::ostream& err) {
  ConfigMap cfg = args.load();
  if (!out_override.empty()) cfg.set("output_dir", out_override);
  const ExperimentConfig ex = resolve(cfg);
  if (ex.output_dir.empty()) throw ParameterError("train needs an output directory (--out or output_dir=)");
  const fs::path dir(ex.output_dir);
  prepare_run_dir(dir);
  {
    std::ofstream c(dir / "config.txt");
    cfg.write(c);
  }
  const Eigen::MatrixXd train = inputs_for(ex, sample_split(ex, "train"));
  const Eigen::MatrixXd validation =
      ex.validation_samples > 0 ? inputs_for(ex, sample_split(ex, "validation")) : Eigen::MatrixXd();
  Trainer trainer(ex.layout(), ex.train, train, validation);
  if (ex.checkpoints) fs::create_directories(dir / "checkpoints");
  const TrainState& state = trainer.run([&](const TrainState& s) {
    if (!ex.checkpoints) return;
    char name[64];
    std::snprintf(name, sizeof name, "iter_%08ld.model", s.iteration);
    save_model_file((dir / "checkpoints" / name).string(), s.model(ex.train.projection));
  });
  save_model_file((dir / "model.txt").string(), trainer.model());
  {
    std::ofstream log(dir / "train_log.csv");
    write_history_csv(log, state.history);
  }
  const MechanismPtr mech = trainer.mechanism();
  EvalConfig eval = ex.eval;
  if (ex.ge_samples > 0) {
    const Eigen::MatrixXd subset = train.leftCols(static_cast<Eigen::Index>(std::min<std::size_t>(ex.ge_samples, train.cols())));
    eval.train_regret = empirical_regret(*mech, subset, eval.misreport).mean_regret;
  }
  Metrics metrics = evaluate(*mech, inputs_for(ex, sample_split(ex, "test")), eval);
  metrics.config["method"] = ex.method();
  metrics.config["setting"] = ex.setting;
  metrics.config["iterations"] = state.iteration;
  metrics.config["early_stopped"] = state.early_stopped;
  write_json(dir / "metrics.json", metrics.to_json());
  report_warnings(metrics, err);
  out << "trained " << ex.method() << " on " << ex.setting << " for " << state.iteration << " iterations: revenue "
      << metrics.revenue << ", regret " << metrics.regret_mean << '\n';
  return kOk;
}

Eigen::MatrixXd test_inputs(const ExperimentConfig& ex, bool symmetrized, std::size_t max_profiles) {
  ValuationBatch batch = sample_split(ex, "test");
  if (symmetrized) batch = symmetrize(batch, max_profiles);
  return inputs_for(ex, batch);
}

ExperimentConfig config_for_model(const ConfigArgs& args, const Model& model) {
  ConfigMap cfg = args.load();
  const Layout& L = model.params.layout;
  if (!cfg.has("setting") && !cfg.has("preset") && !cfg.has("bidders")) {
    cfg.set("bidders", std::to_string(L.bidders));
    cfg.set("items", std::to_string(L.items));
  }
  ExperimentConfig ex = resolve(cfg);
  if (!(ex.layout() == L)) throw ShapeError("model layout does not match the configured setting");
  return ex;
}

int cmd_evaluate(const ConfigArgs& args, const std::string& model_path, const std::string& out_path,
                 bool symmetrized, std::size_t max_profiles, std::optional<double> train_regret, std::ostream& out,
                 std::ostream& err) {
  const Model model = load_model_file(model_path);
  const ExperimentConfig ex = config_for_model(args, model);
  EvalConfig eval = ex.eval;
  eval.train_regret = train_regret;
  Metrics metrics = evaluate(*model.mechanism(), test_inputs(ex, symmetrized, max_profiles), eval);
  metrics.config["method"] = model.projection ? "RegretNet-PE" : "RegretNet";
  metrics.config["setting"] = ex.setting;
  metrics.config["symmetrized"] = symmetrized;
  report_warnings(metrics, err);
  if (out_path.empty()) {
    out << metrics.to_json().dump(2) << '\n';
  } else {
    write_json(out_path, metrics.to_json());
  }
  return kOk;
}

int cmd_project(const ConfigArgs& args, const std::string& model_path, const std::string& out_dir,
                const std::string& mode, const std::string& bidders, const std::string& items,
                std::size_t max_profiles, std::ostream& out, std::ostream& err) {
  const Model model = load_model_file(model_path);
  const ExperimentConfig ex = config_for_model(args, model);
  const ProjectionSpec spec = ProjectionSpec::parse(mode, bidders, items);
  const MechanismPtr base = model.mechanism();
  const auto projected = project_for_test(base, spec);
  const Eigen::MatrixXd test = test_inputs(ex, true, max_profiles);
  Metrics base_metrics = evaluate(*base, test, ex.eval);
  Metrics metrics = evaluate(*projected, test, ex.eval);
  base_metrics.config["method"] = model.projection ? "RegretNet-PE" : "RegretNet";
  metrics.config["method"] = model.projection ? "RegretNet-PE-Test" : "RegretNet-Test";
  for (Metrics* m : {&base_metrics, &metrics}) {
    m->config["setting"] = ex.setting;
    m->config["symmetrized"] = true;
  }
  report_warnings(metrics, err);
  if (out_dir.empty()) {
    out << nlohmann::json{{"base", base_metrics.to_json()}, {"projected", metrics.to_json()}}.dump(2) << '\n';
    return kOk;
  }
  const fs::path dir(out_dir);
  prepare_run_dir(dir);
  // The projected model keeps the trained weights; the test projection is
  // recorded as the model's forward-pass projection.
  Model wrapped = model;
  wrapped.projection = spec;
  if (model.projection && model.projection->to_string() != spec.to_string()) {
    err << "warning: model was trained with projection " << model.projection->to_string()
        << "; the saved model records only " << spec.to_string() << '\n';
  }
  save_model_file((dir / "model.txt").string(), wrapped);
  write_json(dir / "metrics.json", metrics.to_json());
  write_json(dir / "base_metrics.json", base_metrics.to_json());
  out << "revenue " << base_metrics.revenue << " -> " << metrics.revenue << ", regret " << base_metrics.regret_mean
      << " -> " << metrics.regret_mean << '\n';
  return kOk;
}

int cmd_verify(const theoremlab::SuiteConfig& suite, const std::string& out_path, std::ostream& out) {
  const theoremlab::SuiteReport report = theoremlab::run_suite(suite);
  const std::string text = report.to_json().dump(2);
  if (out_path.empty()) {
    out << text << '\n';
  } else {
    std::ofstream f(out_path);
    if (!f) throw ParameterError("cannot write " + out_path);
    f << text << '\n';
    out << (report.passed() ? "all checks passed" : "verification FAILED") << " in " << report.seconds << " s\n";
  }
  return report.passed() ? kOk : kVerification;
}

int cmd_myerson(const std::vector<int>& bidders, std::size_t samples, const std::string& distribution,
                std::uint64_t seed, std::ostream& out) {
  const DistributionSpec dist = DistributionSpec::parse(distribution);
  const double reserve = myerson::myerson_reserve(dist);
  out << "distribution,bidders,reserve,revenue,std_error,samples\n";
  for (int n : bidders) {
    const myerson::McEstimate est = myerson::optimal_revenue_mc(dist, n, samples, seed);
    out << dist.name() << ',' << n << ',' << reserve << ',' << est.mean << ',' << est.std_error << ','
        << est.samples << '\n';
  }
  return kOk;
}

int cmd_export_grid(const std::string& setting_name, int resolution, const std::string& model_path,
                    const std::string& oracle, const std::string& out_path, std::ostream& out) {
  const GridSetting setting = parse_grid_setting(setting_name);
  MechanismPtr mech;
  if (!model_path.empty() == !oracle.empty()) throw ParameterError("export-grid needs exactly one of --model or --oracle");
  if (!model_path.empty()) {
    mech = load_model_file(model_path).mechanism();
  } else if (oracle == "second-price") {
    if (setting != GridSetting::two_by_one) throw ParameterError("the second-price oracle is single-item (2x1)");
    mech = std::make_shared<myerson::SecondPriceMechanism>(2, myerson::myerson_reserve_uniform01());
  } else {
    throw ParameterError("unknown oracle '" + oracle + "'");
  }
  const AllocationGrid grid = export_allocation_grid(*mech, setting, resolution);
  if (out_path.empty()) {
    write_grid_csv(out, grid);
  } else {
    std::ofstream f(out_path);
    if (!f) throw ParameterError("cannot write " + out_path);
    write_grid_csv(f, grid);
  }
  return kOk;
}

int cmd_table(const std::vector<std::string>& runs, std::ostream& out, std::ostream& err) {
  std::vector<TableRow> rows;
  for (const auto& run : runs) {
    const fs::path path = fs::path(run) / "metrics.json";
    std::ifstream in(path);
    if (!in) {
      err << "warning: " << path.string() << " missing; row skipped\n";
      continue;
    }
    try {
      const nlohmann::json j = nlohmann::json::parse(in);
      const Metrics m = Metrics::from_json(j);
      TableRow row;
      row.method = m.config.value("method", std::string("?"));
      row.setting = m.config.value("setting", std::string("?"));
      row.revenue = m.revenue;
      row.regret = m.regret_mean;
      row.ge = m.ge;
      rows.push_back(row);
    } catch (const nlohmann::json::exception& e) {
      err << "warning: " << path.string() << " unreadable (" << e.what() << "); row skipped\n";
    }
  }
  write_table(out, rows);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned auction mechanisms with permutation-equivariant projections"};
  app.require_subcommand(1);
  int workers = 0;
  app.add_option("-w,--workers", workers, "worker threads (default: PEAUCTION_WORKERS or 1)");

  ConfigArgs train_args;
  std::string train_out;
  auto* train = app.add_subcommand("train", "train a mechanism and evaluate it on the test split");
  add_config_options(train, train_args);
  train->add_option("-o,--out", train_out, "run directory");

  ConfigArgs eval_args;
  std::string eval_model;
  std::string eval_out;
  bool eval_sym = false;
  std::size_t max_profiles = 50'000'000;
  std::optional<double> train_regret;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate a model checkpoint");
  add_config_options(evaluate_cmd, eval_args);
  evaluate_cmd->add_option("-m,--model", eval_model, "model checkpoint")->required();
  evaluate_cmd->add_option("-o,--out", eval_out, "metrics JSON path (default: stdout)");
  evaluate_cmd->add_flag("--symmetrize", eval_sym, "evaluate on every permutation of every test profile");
  evaluate_cmd->add_option("--train-regret", train_regret, "training regret, for the generalization error");
  evaluate_cmd->add_option("--max-profiles", max_profiles, "cap on the symmetrized test size");

  ConfigArgs proj_args;
  std::string proj_model;
  std::string proj_out;
  std::string proj_mode = "aggregated";
  std::string proj_bidders;
  std::string proj_items;
  auto* project_cmd = app.add_subcommand("project", "project a trained model at test time and evaluate both");
  add_config_options(project_cmd, proj_args);
  project_cmd->add_option("-m,--model", proj_model, "model checkpoint")->required();
  project_cmd->add_option("-o,--out", proj_out, "run directory for the projected model");
  project_cmd->add_option("--projection", proj_mode, "bidder, item, aggregated or subgroup");
  project_cmd->add_option("--bidders", proj_bidders, "subgroup bidder subset, e.g. 0,1");
  project_cmd->add_option("--items", proj_items, "subgroup item subset");
  project_cmd->add_option("--max-profiles", max_profiles, "cap on the symmetrized test size");

  theoremlab::SuiteConfig suite;
  std::string verify_out;
  std::optional<std::size_t> skip_term;
  auto* verify = app.add_subcommand("verify", "run the brute-force theorem suite");
  verify->add_option("--trials", suite.trials, "random mechanisms per shape");
  verify->add_option("--min-levels", suite.min_levels, "fewest grid levels");
  verify->add_option("--max-levels", suite.max_levels, "most grid levels");
  verify->add_option("--seed", suite.seed, "random seed");
  verify->add_option("--tolerance", suite.tolerance, "tolerance for exact identities");
  verify->add_option("--skip-term", skip_term, "fault injection: drop this orbit term from every projection");
  verify->add_option("-o,--out", verify_out, "report path (default: stdout)");

  std::vector<int> my_bidders{2, 3, 5};
  std::size_t my_samples = 1'000'000;
  std::string my_dist = "uniform";
  std::uint64_t my_seed = 1;
  auto* my = app.add_subcommand("myerson", "Monte Carlo optimal single-item revenue");
  my->add_option("--bidders", my_bidders, "bidder counts")->delimiter(',');
  my->add_option("--samples", my_samples, "Monte Carlo samples");
  my->add_option("--distribution", my_dist, "valuation distribution");
  my->add_option("--seed", my_seed, "random seed");

  std::string grid_setting = "2x1";
  int grid_res = 101;
  std::string grid_model;
  std::string grid_oracle;
  std::string grid_out;
  auto* grid = app.add_subcommand("export-grid", "allocation probabilities over a value lattice");
  grid->add_option("--setting", grid_setting, "2x1 or 1x2");
  grid->add_option("--resolution", grid_res, "lattice points per axis");
  grid->add_option("-m,--model", grid_model, "model checkpoint");
  grid->add_option("--oracle", grid_oracle, "reference mechanism: second-price");
  grid->add_option("-o,--out", grid_out, "CSV path (default: stdout)");

  std::vector<std::string> table_runs;
  auto* table = app.add_subcommand("table", "combine run directories into a results table");
  table->add_option("runs", table_runs, "run directories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (workers > 0) {
      const std::string w = std::to_string(workers);
      for (ConfigArgs* a : {&train_args, &eval_args, &proj_args}) a->assignments.insert(a->assignments.begin(), "workers=" + w);
    }
    if (*train) return cmd_train(train_args, train_out, out, err);
    if (*evaluate_cmd) {
      return cmd_evaluate(eval_args, eval_model, eval_out, eval_sym, max_profiles, train_regret, out, err);
    }
    if (*project_cmd) {
      return cmd_project(proj_args, proj_model, proj_out, proj_mode, proj_bidders, proj_items, max_profiles, out, err);
    }
    if (*verify) {
      suite.options.skip_term = skip_term;
      return cmd_verify(suite, verify_out, out);
    }
    if (*my) return cmd_myerson(my_bidders, my_samples, my_dist, my_seed, out);
    if (*grid) return cmd_export_grid(grid_setting, grid_res, grid_model, grid_oracle, grid_out, out);
    if (*table) return cmd_table(table_runs, out, err);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const DataError& e) {
    err << "data failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const VerificationError& e) {
    err << "verification failure: " << e.what() << '\n';
    return kVerification;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace peauction::cli
