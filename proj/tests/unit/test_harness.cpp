/*
 * Copyright (c) 2026 The innaprop-cpp Authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "innaprop/harness.hpp"

namespace innaprop::harness {
namespace {

const std::string kSourceDir = INNAPROP_SOURCE_DIR;
const std::string kCli = INNAPROP_CLI_PATH;

std::string source_path(const std::string& rel) { return kSourceDir + "/" + rel; }

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("innaprop_harness_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig quadratic(const std::string& extra = "") {
  return parse_config_text(R"({"problem":"quadratic","optimizer":"innaprop","lr":1e-3,"steps":50)" + extra + "}");
}

std::string config_error_key(const std::string& text) {
  try {
    (void)parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<accepted>";
}

// --- Config ---------------------------------------------------------------

TEST(Config, MinimalConfigGetsDefaults) {
  const RunConfig c = parse_config_text(
      R"({"problem":"rosenbrock","optimizer":"innaprop","alpha":0.1,"beta":0.9,"lr":1e-3,"steps":100})");
  EXPECT_EQ(c.problem, ProblemKind::rosenbrock);
  EXPECT_EQ(c.optimizer, OptimizerKind::innaprop);
  EXPECT_EQ(c.sigma, 0.999);
  EXPECT_EQ(c.epsilon, 1e-8);
  EXPECT_EQ(c.weight_decay, 0.01);
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.999);
  EXPECT_EQ(c.budget, 100);
  EXPECT_EQ(c.budget_unit, BudgetUnit::steps);
  EXPECT_EQ(c.schedule.t_max, 100);
  EXPECT_FALSE(c.grad_clip.has_value());
}

TEST(Config, CosinePeakAboveBetaRejected) {
  EXPECT_EQ(config_error_key(
                R"({"problem":"quadratic","optimizer":"innaprop","alpha":0.1,"beta":0.9,"lr":1.0,"schedule":"cosine","steps":10})"),
            "beta");
}

TEST(Config, ReferenceMethodsSkipWellPosednessGuard) {
  EXPECT_NO_THROW((void)parse_config_text(R"({"problem":"quadratic","optimizer":"adamw","lr":1.0,"steps":10})"));
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(config_error_key(R"({"problem":"quadratic","bogus":1})"), "bogus");
  EXPECT_EQ(config_error_key(R"({"problem":"quadratic","lr":"fast"})"), "lr");
  EXPECT_EQ(config_error_key(R"({"problem":"quadratic","steps":1.5})"), "steps");
  EXPECT_EQ(config_error_key(R"({"problem":"quadratic","steps":0})"), "steps");
  EXPECT_EQ(config_error_key(R"({"problem":"quadratic","sigma":1.5})"), "sigma");
  EXPECT_EQ(config_error_key(R"({"problem":"quadratic","sigma":1.0})"), "sigma");
  EXPECT_EQ(config_error_key(R"({"problem":"cubic"})"), "problem");
  EXPECT_EQ(config_error_key(R"({"optimizer":"lion"})"), "optimizer");
  EXPECT_EQ(config_error_key(R"({"steps":10,"epochs":2,"problem":"tiny_mlp"})"), "epochs");
  EXPECT_EQ(config_error_key(R"({"problem":"quadratic","steps":10,"t_max":5})"), "t_max");
  EXPECT_EQ(config_error_key(R"({"problem":"quadratic","spectrum":[1,-1]})"), "spectrum");
  EXPECT_EQ(config_error_key(R"({"problem":"tiny_mlp","dataset":"csv"})"), "csv_path");
  EXPECT_EQ(config_error_key(R"({"optimizer":"innaprop_momentum","alpha":1000,"lr":1e-3,"steps":5})"), "alpha");
  EXPECT_EQ(config_error_key(R"([1,2])"), "<root>");
}

TEST(Config, IntegralFloatAcceptedForCounts) {
  EXPECT_EQ(parse_config_text(R"({"steps":20.0})").budget, 20);
}

TEST(Config, SyntaxErrorReportsPosition) {
  try {
    (void)parse_config_text("{\n  \"steps\": 10,\n  oops\n}");
    FAIL() << "accepted malformed JSON";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GE(e.column(), 3u);
  }
}

TEST(Config, MissingFileIsIoError) { EXPECT_THROW((void)parse_config("/nonexistent/cfg.json"), IoError); }

TEST(Config, RoundTrip) {
  std::vector<RunConfig> configs{
      RunConfig{},
      quadratic(R"(,"grad_clip":0.5,"precision":"f32","seed":7,"stream":3)"),
      parse_config_text(R"({"problem":"tiny_mlp","epochs":3,"batch_size":16,"hidden":[4,4],"activation":"relu",
                            "schedule":"cosine_warmup","t_warmup":1,"t_decay":2,"lr":1e-3,"sampler":"iid"})"),
      parse_config_text(R"({"optimizer":"innaprop_momentum","momentum_form":"direct","steps":5})"),
  };
  for (const auto& path : {"presets/cifar.preset", "presets/gpt2_small.preset", "presets/lora.preset",
                           "configs/tiny_mlp_adamw.json", "configs/quadratic_adamw_sweep.json"}) {
    configs.push_back(parse_config(source_path(path)));
  }
  for (const auto& c : configs) {
    const RunConfig back = parse_config_text(emit_config(c).dump());
    EXPECT_EQ(back, c);
    EXPECT_EQ(emit_config(back).dump(), emit_config(c).dump());
  }
}

TEST(Config, OverridesRevalidate) {
  const RunConfig c = quadratic();
  EXPECT_EQ(with_overrides(c, json{{"alpha", 2.0}}).alpha, 2.0);
  EXPECT_THROW((void)with_overrides(c, json{{"lr", 5.0}}), ConfigError);
  EXPECT_EQ(with_overrides(c, json{{"steps", 10}}).budget, 10);
}

TEST(Config, PairedInnapropReusesAdamwProtocol) {
  const RunConfig adamw = parse_config(source_path("configs/tiny_mlp_adamw.json"));
  const RunConfig inna = paired_innaprop_from_adamw(adamw, 0.1, 0.9);
  EXPECT_EQ(inna.optimizer, OptimizerKind::innaprop);
  EXPECT_EQ(inna.schedule, adamw.schedule);
  EXPECT_EQ(inna.weight_decay, adamw.weight_decay);
  EXPECT_EQ(inna.sigma, adamw.beta2);
  EXPECT_EQ(inna.budget, adamw.budget);
  EXPECT_EQ(inna.batch_size, adamw.batch_size);
  const RunConfig overridden = paired_innaprop_from_adamw(adamw, 0.1, 0.9, json{{"weight_decay", 0.1}});
  EXPECT_EQ(overridden.weight_decay, 0.1);
  EXPECT_THROW((void)paired_innaprop_from_adamw(inna, 0.1, 0.9), ConfigError);
}

TEST(Presets, PublishedHyperparameters) {
  const RunConfig gpt2 = parse_config(source_path("presets/gpt2_small.preset"));
  EXPECT_EQ(gpt2.sigma, 0.99);
  EXPECT_EQ(gpt2.weight_decay, 0.1);
  EXPECT_EQ(gpt2.schedule.gamma0, 6e-4);
  EXPECT_EQ(gpt2.grad_clip, 1.0);
  EXPECT_EQ(gpt2.schedule.kind, ScheduleKind::cosine_warmup);
  EXPECT_EQ(gpt2.schedule.t_warmup, 500);
  EXPECT_EQ(gpt2.beta2, 0.95);
  EXPECT_EQ(gpt2.batch_size, 12u);

  const RunConfig cifar = parse_config(source_path("presets/cifar.preset"));
  EXPECT_EQ(cifar.sigma, 0.999);
  EXPECT_EQ(cifar.weight_decay, 0.01);
  EXPECT_EQ(cifar.schedule.gamma0, 1e-3);
  EXPECT_EQ(cifar.schedule.kind, ScheduleKind::cosine);
  EXPECT_EQ(cifar.schedule.t_max, 200);
  EXPECT_EQ(cifar.budget_unit, BudgetUnit::epochs);
  EXPECT_EQ(cifar.budget, 200);
  EXPECT_EQ(cifar.batch_size, 256u);

  const RunConfig lora = parse_config(source_path("presets/lora.preset"));
  EXPECT_EQ(lora.sigma, 0.98);
  EXPECT_EQ(lora.weight_decay, 0.01);
  EXPECT_EQ(lora.schedule.gamma0, 2e-4);
  EXPECT_EQ(lora.schedule.kind, ScheduleKind::linear_warmup);
  EXPECT_EQ(lora.schedule.t_warmup, 500);
  EXPECT_EQ(lora.batch_size, 8u);
  for (const auto* c : {&gpt2, &cifar, &lora}) {
    EXPECT_EQ(c->alpha, 0.1);
    EXPECT_EQ(c->beta, 0.9);
  }
}

TEST(Defaults, GridAndLearningRates) {
  EXPECT_EQ(default_grid(), (std::vector<double>{0.1, 0.5, 0.9, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0}));
  EXPECT_EQ(default_lrs(), (std::vector<double>{1e-4, 5e-4, 1e-3, 5e-3, 1e-2}));
}

// --- Runner ---------------------------------------------------------------

TEST(Run, CsvSchemaAndLogging) {
  const RunResult r = run_experiment(quadratic(R"(,"log_every":20)"));
  const std::string csv = render_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,lr,train_loss,test_metric,status");
  std::vector<std::int64_t> steps;
  for (const auto& row : r.records) steps.push_back(row.step);
  EXPECT_EQ(steps, (std::vector<std::int64_t>{0, 5, 20, 40, 50}));
  EXPECT_EQ(r.short_step, 5);
  EXPECT_EQ(r.status, RunStatus::ok);
  EXPECT_EQ(r.steps_completed, 50);
  EXPECT_EQ(r.records.front().train_loss, 5.5);
}

TEST(Run, StepUsesScheduleIndexKMinusOne) {
  const RunResult r = run_experiment(quadratic(R"(,"schedule":"cosine","steps":4,"t_max":4)"));
  const ScheduleSpec& s = r.config.schedule;
  ASSERT_EQ(r.records.size(), 5u);
  for (std::int64_t k = 1; k <= 4; ++k) EXPECT_EQ(r.records[static_cast<std::size_t>(k)].lr, lr_at(s, k - 1));
}

TEST(Run, EpochBudgetIndexesScheduleByEpoch) {
  const RunConfig c = parse_config_text(
      R"({"problem":"logistic_regression","n_samples":40,"test_fraction":0.0,"batch_size":10,"epochs":3,
          "schedule":"cosine","t_max":3,"lr":1e-2,"optimizer":"adam"})");
  const RunResult r = run_experiment(c);
  EXPECT_EQ(r.total_steps, 12);
  for (const auto& row : r.records) {
    if (row.step == 0) continue;
    EXPECT_EQ(row.lr, lr_at(c.schedule, (row.step - 1) / 4)) << row.step;
  }
}

TEST(Run, DeterministicBytes) {
  const RunConfig c = parse_config(source_path("configs/tiny_mlp_adamw.json"));
  EXPECT_EQ(render_csv(run_experiment(c)), render_csv(run_experiment(c)));
  const RunConfig f32 = with_overrides(c, json{{"precision", "f32"}, {"optimizer", "innaprop"}});
  EXPECT_EQ(render_csv(run_experiment(f32)), render_csv(run_experiment(f32)));
}

TEST(Run, StreamChangesOnlyTheMinibatchOrder) {
  const RunConfig c = parse_config(source_path("configs/tiny_mlp_adamw.json"));
  const RunResult a = run_experiment(c);
  const RunResult b = run_experiment(with_overrides(c, json{{"stream", 5}}));
  EXPECT_EQ(a.records.front(), b.records.front());
  EXPECT_NE(render_csv(a), render_csv(b));
}

TEST(Run, InnapropAlphaBetaOneMatchesAdamwWithoutMomentum) {
  for (const std::string base : {R"({"problem":"rosenbrock","steps":300,"lr":1e-3)",
                                 R"({"problem":"tiny_mlp","n_samples":128,"batch_size":16,"steps":300,"lr":1e-3)"}) {
    const RunConfig inna = parse_config_text(base + R"(,"optimizer":"innaprop","alpha":1,"beta":1,"weight_decay":0.01})");
    const RunConfig adamw = parse_config_text(base + R"(,"optimizer":"adamw","beta1":0,"weight_decay":0.01})");
    const RunResult a = run_experiment(inna);
    const RunResult b = run_experiment(adamw);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      EXPECT_EQ(a.records[i].step, b.records[i].step);
      EXPECT_NEAR(a.records[i].train_loss, b.records[i].train_loss, 1e-12 * std::abs(b.records[i].train_loss));
    }
  }
}

TEST(Run, QuadraticInnapropTwoTwoCosineRegression) {
  const RunResult r = run_experiment(parse_config(source_path("configs/quadratic_innaprop.json")));
  ASSERT_EQ(r.status, RunStatus::ok);
  ASSERT_TRUE(r.final_train_loss.has_value());
  // Frozen from the oracle run: 2.1343717825584609 after 500 steps from theta = (1, 1).
  EXPECT_NEAR(*r.final_train_loss, 2.1343717825584609, 1e-9);
  EXPECT_LT(*r.final_train_loss, r.records.front().train_loss);
}

TEST(Run, DivergenceIsAStatusNotACrash) {
  const RunConfig c = parse_config_text(R"({"problem":"quadratic","spectrum":[1e300],"optimizer":"sgd","lr":10,
                                            "weight_decay":0,"steps":50})");
  const RunResult r = run_experiment(c);
  EXPECT_EQ(r.status, RunStatus::diverged);
  ASSERT_TRUE(r.diverged_step.has_value());
  EXPECT_GE(*r.diverged_step, 1);
  EXPECT_EQ(r.records.back().status, RunStatus::diverged);
  const std::string csv = render_csv(r);
  EXPECT_NE(csv.find(",nan,,diverged\n"), std::string::npos);
  EXPECT_TRUE(summary_json(r)["final_train_loss"].is_null());
}

TEST(Run, EveryOptimizerRunsInBothPrecisions) {
  for (auto kind : kAllOptimizers) {
    for (const char* precision : {"f64", "f32"}) {
      const RunConfig c = parse_config_text(std::string(R"({"problem":"rosenbrock","steps":20,"lr":1e-3,"optimizer":")") +
                                            to_string(kind) + R"(","precision":")" + precision + R"("})");
      const RunResult r = run_experiment(c);
      EXPECT_EQ(r.status, RunStatus::ok) << to_string(kind) << " " << precision;
      EXPECT_LT(*r.final_train_loss, r.records.front().train_loss) << to_string(kind) << " " << precision;
    }
  }
}

TEST(Run, LeastSquaresBestMetricIsLowest) {
  const RunResult r = run_experiment(parse_config_text(
      R"({"problem":"least_squares","dataset":"linear_regression","optimizer":"adam","lr":1e-2,"steps":200,"log_every":10})"));
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& row : r.records) lowest = std::min(lowest, *row.test_metric);
  EXPECT_EQ(*r.best_test_metric, lowest);
}

TEST(Run, CsvDatasetFromFile) {
  const auto dir = scratch_dir("csv");
  std::ofstream(dir / "data.csv") << "x1,x2,label\n0,0,0\n1,1,1\n0.1,0,0\n0.9,1,1\n";
  const RunConfig c = parse_config_text(R"({"problem":"logistic_regression","dataset":"csv","csv_path":")" +
                                        (dir / "data.csv").string() + R"(","split_fraction":0.5,"steps":5})");
  EXPECT_EQ(run_experiment(c).status, RunStatus::ok);
  const std::string before = input_hash(c);
  std::ofstream(dir / "data.csv", std::ios::app) << "0.2,0,0\n";
  EXPECT_NE(input_hash(c), before);
}

TEST(Run, SummaryJson) {
  const RunConfig c = quadratic();
  const json j = summary_json(run_experiment(c));
  EXPECT_EQ(j["input_hash"], input_hash(c));
  EXPECT_EQ(j["input_hash"], git_blob_sha1(emit_config(c).dump()));
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["steps"], 50);
  EXPECT_TRUE(j["diverged_step"].is_null());
  EXPECT_EQ(parse_config_json(j["config"]), c);
  EXPECT_TRUE(j.contains("wall_time_seconds"));
}

TEST(Run, WritesOutputs) {
  const auto dir = scratch_dir("write");
  const RunResult r = run_experiment(quadratic());
  write_run(r, dir / "nested");
  EXPECT_EQ(read_file(dir / "nested" / "run.csv"), render_csv(r));
  EXPECT_TRUE(std::filesystem::exists(dir / "nested" / "summary.json"));
  std::ofstream(dir / "blocker") << "x";
  EXPECT_THROW(write_run(r, dir / "blocker" / "sub"), IoError);
}

// --- Hash -----------------------------------------------------------------

TEST(Hash, MatchesGitBlobIds) {
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

// --- Grid and sweep -----------------------------------------------------------

TEST(Grid, TwoByTwoSortedRows) {
  const RunConfig base = quadratic();
  const GridResult g = grid_search(base, {2.0, 0.5}, {1.5, 0.9}, 2);
  ASSERT_EQ(g.rows.size(), 4u);
  EXPECT_EQ(g.rows[0].alpha, 0.5);
  EXPECT_EQ(g.rows[0].beta, 0.9);
  EXPECT_EQ(g.rows[1].alpha, 0.5);
  EXPECT_EQ(g.rows[1].beta, 1.5);
  EXPECT_EQ(g.rows[2].alpha, 2.0);
  EXPECT_EQ(g.rows[3].beta, 1.5);
  EXPECT_EQ(g.rows[0].cell, 3u);
  const std::string csv = render_grid_csv(g);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "alpha,beta,cell,status,short_train_loss,short_test_metric,final_train_loss,final_test_metric,"
            "best_test_metric");
}

TEST(Grid, ParallelExecutionIsBytewiseDeterministic) {
  RunConfig base = parse_config(source_path("configs/tiny_mlp_innaprop_grid.json"));
  base = with_overrides(base, json{{"steps", 200}});
  const std::vector<double> values{0.1, 0.9, 2.0};
  const GridResult serial = grid_search(base, values, values, 1);
  const GridResult parallel = grid_search(base, values, values, 4);
  EXPECT_EQ(render_grid_csv(serial), render_grid_csv(parallel));
  EXPECT_EQ(serial.cell_csv, parallel.cell_csv);
  for (std::size_t cell = 0; cell < serial.cell_csv.size(); ++cell) {
    const RunConfig c = grid_cell_config(base, values, values, cell / 3, cell % 3);
    EXPECT_EQ(c.stream, cell);
    EXPECT_EQ(render_csv(run_experiment(c)), serial.cell_csv[cell]);
  }
}

TEST(Grid, CellOneOneEqualsStandaloneAdamw) {
  const RunConfig base = parse_config_text(R"({"problem":"rosenbrock","optimizer":"innaprop","lr":1e-3,"steps":300})");
  const GridResult g = grid_search(base, {0.5, 1.0}, {1.0, 2.0}, 2);
  const RunConfig adamw = parse_config_text(R"({"problem":"rosenbrock","optimizer":"adamw","beta1":0,"lr":1e-3,"steps":300})");
  const RunResult standalone = run_experiment(adamw);
  const auto cell = std::find_if(g.rows.begin(), g.rows.end(), [](const GridRow& r) { return r.alpha == 1.0 && r.beta == 1.0; });
  ASSERT_NE(cell, g.rows.end());
  EXPECT_NEAR(*cell->final_train_loss, *standalone.final_train_loss, 1e-12 * *standalone.final_train_loss);
}

TEST(Grid, IllPosedCellRejectedBeforeCompute) {
  const RunConfig base = parse_config_text(R"({"problem":"quadratic","optimizer":"innaprop","lr":0.2,"steps":5})");
  try {
    (void)grid_search(base, {0.1}, {0.5, 0.1});
    FAIL() << "grid accepted beta below the learning rate";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "beta");
  }
}

TEST(Grid, DivergedCellDoesNotAbortSiblings) {
  const RunConfig base = parse_config_text(
      R"({"problem":"quadratic","spectrum":[1e300],"optimizer":"innaprop_momentum","lr":0.5,"steps":30})");
  const GridResult g = grid_search(base, {0.0, 1.0}, {0.9, 4.0}, 2);
  EXPECT_EQ(g.rows.size(), 4u);
}

TEST(Grid, RejectsDuplicateAxes) {
  EXPECT_THROW((void)grid_search(quadratic(), {0.1, 0.1}, {0.9}), ConfigError);
  EXPECT_THROW((void)grid_search(quadratic(), {}, {0.9}), ConfigError);
}

TEST(Sweep, AdamwQuadraticBestLearningRateIsInterior) {
  const RunConfig base = parse_config(source_path("configs/quadratic_adamw_sweep.json"));
  const auto rows = lr_sweep(base, default_lrs());
  ASSERT_EQ(rows.size(), 5u);
  const auto best = best_lr(rows);
  ASSERT_TRUE(best.has_value());
  EXPECT_NE(*best, default_lrs().front());
  EXPECT_NE(*best, default_lrs().back());
  EXPECT_EQ(*best, 5e-3);
}

TEST(Sweep, DuplicateLearningRatesRejected) {
  try {
    (void)lr_sweep(quadratic(), {1e-3, 1e-4, 1e-3});
    FAIL() << "duplicate accepted";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "lrs");
  }
}

TEST(Sweep, CsvColumns) {
  const std::string csv = render_sweep_csv(lr_sweep(quadratic(), {1e-4, 1e-3}));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "lr,status,final_train_loss,final_test_metric,best_test_metric");
}

// --- Checks ---------------------------------------------------------------

TEST(Checks, DeterministicSuitesPass) {
  for (const std::string suite : {"equivalence", "gradients", "schedulers", "ode"}) {
    const CheckReport r = run_check(suite);
    EXPECT_TRUE(r.passed()) << render_report(r);
  }
  EXPECT_THROW((void)run_check("nope"), ConfigError);
}

TEST(Checks, InstabilityMeasurement) {
  const InstabilityReport m = measure_instability(500, 16);
  EXPECT_LT(m.f64_final_loss, m.f64_initial_loss);
  EXPECT_GE(m.mtilde_noop_fraction, 0.0);
  EXPECT_LE(m.mtilde_noop_fraction, 1.0);
  EXPECT_GT(m.absorbed_fraction, 0.5);
}

// --- CLI ------------------------------------------------------------------

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  EXPECT_EQ(run_cli("run --config \"" + source_path("configs/rosenbrock_minimal.json") + "\" --out \"" +
                    (dir / "run").string() + "\""),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "run.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "summary.json"));
  std::ofstream(dir / "bad.json") << R"({"problem":"quadratic","lr":1.0,"schedule":"cosine"})";
  EXPECT_EQ(run_cli("run --config \"" + (dir / "bad.json").string() + "\""), 2);
  std::ofstream(dir / "broken.json") << "{\"problem\":";
  EXPECT_EQ(run_cli("run --config \"" + (dir / "broken.json").string() + "\""), 2);
  EXPECT_EQ(run_cli("run --config /nonexistent/cfg.json"), 3);
  EXPECT_EQ(run_cli("check schedulers"), 0);
  EXPECT_EQ(run_cli("check nonsense"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("sweep --config \"" + source_path("configs/rosenbrock_minimal.json") + "\" --lrs 1e-3 1e-3"), 2);
  std::ofstream(dir / "blocker") << "x";
  EXPECT_EQ(run_cli("run --config \"" + source_path("configs/rosenbrock_minimal.json") + "\" --out \"" +
                    (dir / "blocker" / "sub").string() + "\""),
            3);
}

TEST(Cli, GlobalFlagsOverrideConfig) {
  const auto dir = scratch_dir("flags");
  ASSERT_EQ(run_cli("--seed 9 --precision f32 --out \"" + dir.string() + "\" run --config \"" +
                    source_path("configs/rosenbrock_minimal.json") + "\""),
            0);
  const json summary = json::parse(read_file(dir / "summary.json"));
  EXPECT_EQ(summary["config"]["seed"], 9);
  EXPECT_EQ(summary["config"]["precision"], "f32");
}

TEST(Cli, GridSweepAndOdeWriteFiles) {
  const auto dir = scratch_dir("cmds");
  const std::string cfg = source_path("configs/rosenbrock_minimal.json");
  EXPECT_EQ(run_cli("grid --config \"" + cfg + "\" --alphas 0.1 0.5 --betas 0.9 --cells --out \"" +
                    (dir / "grid").string() + "\""),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "grid" / "grid.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "grid" / "cells" / "cell_1.csv"));
  EXPECT_EQ(run_cli("sweep --config \"" + cfg + "\" --out \"" + (dir / "sweep").string() + "\""), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "sweep" / "sweep.csv"));
  EXPECT_EQ(run_cli("ode --config \"" + source_path("configs/flow_quadratic.json") + "\" --out \"" +
                    (dir / "ode").string() + "\""),
            0);
  const std::string traj = read_file(dir / "ode" / "trajectory.csv");
  EXPECT_EQ(traj.substr(0, traj.find('\n')), "t,theta_0,theta_1,loss");
}

}  // namespace
}  // namespace innaprop::harness
