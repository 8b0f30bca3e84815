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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "peauction/cli.hpp"
#include "peauction/errors.hpp"

using namespace peauction;
using namespace peauction::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "peauction");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& tag) {
  std::random_device rd;
  const fs::path p = fs::temp_directory_path() / ("peauction_" + tag + "_" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> tiny_train(const fs::path& out) {
  return {"train", "-s", "setting=2x1-uniform", "-s", "iterations=8", "-s", "lambda_period=4", "-s",
          "train_samples=256", "-s", "validation_samples=0", "-s", "test_samples=40", "-s", "ge_samples=20",
          "-s", "hidden_width=4", "-s", "hidden_layers=1", "-s", "batch_size=32", "-s", "misreport_steps=3",
          "-s", "test_misreport_steps=5", "-s", "test_misreport_inits=2", "-s", "workers=1", "-o", out.string()};
}

}  // namespace

TEST_CASE("config maps parse assignments and comments") {
  std::istringstream in("# comment\n\nseed = 4\niterations=10\nseed=5\n");
  ConfigMap c = ConfigMap::parse(in);
  CHECK(c.get_long("seed", 0) == 5);
  CHECK(c.get_long("iterations", 0) == 10);
  CHECK(c.get("missing", "x") == "x");
  c.assign("learning_rate=0.01");
  CHECK(c.get_double("learning_rate", 0.0) == 0.01);
  CHECK_THROWS_AS(c.assign("no_equals"), ParameterError);
  c.set("hidden_width", "abc");
  CHECK_THROWS_AS(c.get_long("hidden_width", 1), ParameterError);
  std::ostringstream w;
  c.write(w);
  std::istringstream back(w.str());
  CHECK(ConfigMap::parse(back).values() == c.values());
}

TEST_CASE("presets cover every setting at desk and full scale") {
  const auto names = preset_names();
  CHECK(names.size() == 2 * known_settings().size());
  for (const auto& name : names) CHECK_NOTHROW(resolve(preset(name)));
  ConfigMap c;
  c.set("preset", "2x1-uniform-desk");
  const ExperimentConfig desk = resolve(c);
  CHECK(desk.bidders == 2);
  CHECK(desk.items == 1);
  CHECK(desk.train.batch_size == 128);
  CHECK(desk.train.misreport_steps == 25);
  CHECK(desk.train.lambda_period == 200);
  CHECK(desk.method() == "RegretNet");
  c.set("preset", "5x3-uniform-full");
  const ExperimentConfig full = resolve(c);
  CHECK(full.train.arch.hidden_width == 100);
  CHECK(full.train_samples == 640000);
  CHECK_THROWS_AS(preset("9x9-uniform-desk"), ParameterError);
}

TEST_CASE("resolve validates keys and derives layouts") {
  ConfigMap c;
  c.set("setting", "3x1-compound-a");
  CHECK(resolve(c).layout().bidder_context_dim == 1);
  c.set("setting", "5x1-compound-c");
  const Layout lc = resolve(c).layout();
  CHECK(lc.bidder_context_dim == lc.item_context_dim);
  CHECK(lc.item_context_dim > 0);
  c.set("setting", "2x2-uniform");
  c.set("projection", "aggregated");
  CHECK(resolve(c).method() == "RegretNet-PE");
  c.set("bogus_key", "1");
  CHECK_THROWS_AS(resolve(c), ParameterError);
  ConfigMap d;
  d.set("setting", "2x1-uniform");
  d.set("projection", "subgroup");
  d.set("projection_bidders", "0,5");
  CHECK_THROWS_AS(resolve(d), ParameterError);
  ConfigMap e;
  e.set("setting", "2x1-uniform");
  e.set("train_samples", "10");
  CHECK_THROWS_AS(resolve(e), ParameterError);
}

TEST_CASE("data splits are disjoint streams") {
  ConfigMap c;
  c.set("setting", "2x1-uniform");
  c.set("train_samples", "200");
  c.set("test_samples", "200");
  const ExperimentConfig ex = resolve(c);
  const ValuationBatch a = sample_split(ex, "train");
  const ValuationBatch b = sample_split(ex, "test");
  CHECK(a.size() == 200);
  CHECK(a.profiles[0].values != b.profiles[0].values);
  CHECK(sample_split(ex, "train").profiles[7].values == a.profiles[7].values);
  CHECK_THROWS_AS(sample_split(ex, "holdout"), ParameterError);
}

TEST_CASE("table formatting scales by 1e5 with three significant digits") {
  CHECK(format_scaled(0.000174) == "17.4");
  CHECK(format_scaled(0.0) == "0");
  CHECK(format_scaled(0.0123) == "1230");
  CHECK(format_scaled(3.21e-8) == "0.00321");
  std::ostringstream out;
  write_table(out, {{"RegretNet", "2x1-uniform", 0.4163, 0.000174, std::nullopt},
                    {"RegretNet-Test", "2x1-uniform", 0.4163, 0.0000912, 0.00001}});
  CHECK(out.str() ==
        "method,setting,revenue,regret_x1e5,ge_x1e5\n"
        "RegretNet,2x1-uniform,0.416,17.4,-\n"
        "RegretNet-Test,2x1-uniform,0.416,9.12,1\n");
}

TEST_CASE("exit codes") {
  CHECK(run_cli({}).code == kUsage);
  CHECK(run_cli({"frobnicate"}).code == kUsage);
  CHECK(run_cli({"train", "-s", "nonsense_key=1", "-o", scratch_dir("bad").string()}).code == kUsage);
  const Result ok = run_cli({"verify", "--trials", "2", "--max-levels", "3"});
  CHECK(ok.code == kOk);
  CHECK(nlohmann::json::parse(ok.out)["passed"] == true);
  CHECK(run_cli({"verify", "--trials", "2", "--max-levels", "3", "--skip-term", "1"}).code == kVerification);
  CHECK(run_cli({"export-grid", "--setting", "2x1"}).code == kUsage);
}

TEST_CASE("myerson and export-grid subcommands") {
  const Result my = run_cli({"myerson", "--bidders", "2,3", "--samples", "20000"});
  REQUIRE(my.code == kOk);
  std::istringstream lines(my.out);
  std::string header, row;
  std::getline(lines, header);
  CHECK(header == "distribution,bidders,reserve,revenue,std_error,samples");
  std::getline(lines, row);
  CHECK(row.rfind("uniform,2,0.5,", 0) == 0);
  const Result grid = run_cli({"export-grid", "--setting", "2x1", "--resolution", "3", "--oracle", "second-price"});
  REQUIRE(grid.code == kOk);
  CHECK(grid.out == "v1,v2,prob_bidder1,prob_bidder2\n0,0,0,0\n0,0.5,0,1\n0,1,0,1\n0.5,0,1,0\n0.5,0.5,1,0\n"
                    "0.5,1,0,1\n1,0,1,0\n1,0.5,1,0\n1,1,1,0\n");
}

TEST_CASE("train, evaluate, project and tabulate a tiny run") {
  const fs::path root = scratch_dir("runs");
  const fs::path a = root / "a";
  const fs::path b = root / "b";
  const Result ra = run_cli(tiny_train(a));
  REQUIRE_MESSAGE(ra.code == kOk, ra.err);
  REQUIRE(run_cli(tiny_train(b)).code == kOk);
  for (const char* f : {"config.txt", "model.txt", "train_log.csv", "metrics.json"}) CHECK(fs::exists(a / f));
  CHECK(fs::exists(a / "checkpoints" / "iter_00000004.model"));
  CHECK(slurp(a / "checkpoints" / "iter_00000008.model") == slurp(b / "checkpoints" / "iter_00000008.model"));
  CHECK(slurp(a / "model.txt") == slurp(b / "model.txt"));
  const nlohmann::json ma = nlohmann::json::parse(slurp(a / "metrics.json"));
  CHECK(ma["config"]["method"] == "RegretNet");
  CHECK(ma["config"]["iterations"] == 8);
  CHECK(ma["ge"].is_number());
  // Existing results are never overwritten.
  CHECK(run_cli(tiny_train(a)).code == kUsage);

  auto pe_args = tiny_train(root / "pe");
  pe_args.insert(pe_args.end() - 2, {"-s", "projection=bidder"});
  REQUIRE(run_cli(pe_args).code == kOk);
  CHECK(slurp(root / "pe" / "model.txt").find("projection bidder\n") != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(root / "pe" / "metrics.json"))["config"]["method"] == "RegretNet-PE");

  const Result ev = run_cli({"evaluate", "-m", (a / "model.txt").string(), "-s", "test_samples=30", "-s",
                             "test_misreport_steps=3", "-s", "test_misreport_inits=1", "--train-regret", "0.001"});
  REQUIRE(ev.code == kOk);
  CHECK(nlohmann::json::parse(ev.out)["config"]["test_size"] == 30);

  const Result pr = run_cli({"project", "-m", (a / "model.txt").string(), "-o", (root / "test").string(),
                             "--projection", "bidder", "-s", "test_samples=20", "-s", "test_misreport_steps=3", "-s",
                             "test_misreport_inits=1"});
  REQUIRE_MESSAGE(pr.code == kOk, pr.err);
  const nlohmann::json base = nlohmann::json::parse(slurp(root / "test" / "base_metrics.json"));
  const nlohmann::json proj = nlohmann::json::parse(slurp(root / "test" / "metrics.json"));
  CHECK(proj["config"]["method"] == "RegretNet-Test");
  CHECK(proj["config"]["test_size"] == 40);
  CHECK(std::abs(base["revenue"].get<double>() - proj["revenue"].get<double>()) < 1e-12);

  const Result tab = run_cli({"table", a.string(), (root / "pe").string(), (root / "test").string(),
                              (root / "missing").string()});
  CHECK(tab.code == kOk);
  CHECK(tab.err.find("missing") != std::string::npos);
  std::istringstream tl(tab.out);
  std::string line;
  int count = 0;
  while (std::getline(tl, line)) ++count;
  CHECK(count == 4);
  fs::remove_all(root);
}
