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

// Command-line front end: run, grid, sweep, check, ode.
// Exit codes: 0 success, 1 invariant failure, 2 config error, 3 I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "innaprop/harness.hpp"
#include "innaprop/innaprop.hpp"

namespace {

using namespace innaprop;
using namespace innaprop::harness;

constexpr int kOk = 0;
constexpr int kInvariantFailure = 1;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> precision;
  std::optional<std::string> out;
};

RunConfig load(const std::string& path, const GlobalFlags& flags) {
  RunConfig c = parse_config(path);
  json patch = json::object();
  if (flags.seed) patch["seed"] = *flags.seed;
  if (flags.precision) patch["precision"] = *flags.precision;
  if (flags.out) patch["output"] = *flags.out;
  return patch.empty() ? c : with_overrides(c, patch);
}

int cmd_run(const std::string& path, const GlobalFlags& flags) {
  const RunConfig c = load(path, flags);
  const RunResult r = run_experiment(c);
  if (c.output.empty()) {
    std::cout << render_csv(r);
  } else {
    write_run(r, c.output);
    std::cout << "status " << to_string(r.status) << ", " << r.steps_completed << "/" << r.total_steps
              << " steps, wrote " << (std::filesystem::path(c.output) / "run.csv").string() << "\n";
  }
  return kOk;
}

int cmd_grid(const std::string& path, const GlobalFlags& flags, std::vector<double> alphas,
             std::vector<double> betas, unsigned threads, bool per_cell) {
  const RunConfig c = load(path, flags);
  if (alphas.empty()) alphas = default_grid();
  if (betas.empty()) betas = default_grid();
  const GridResult g = grid_search(c, alphas, betas, threads);
  if (c.output.empty()) {
    std::cout << render_grid_csv(g);
  } else {
    write_grid(g, c.output, per_cell);
    std::cout << g.rows.size() << " cells, " << g.diverged() << " diverged, wrote "
              << (std::filesystem::path(c.output) / "grid.csv").string() << "\n";
  }
  return kOk;
}

int cmd_sweep(const std::string& path, const GlobalFlags& flags, std::vector<double> lrs, unsigned threads) {
  const RunConfig c = load(path, flags);
  if (lrs.empty()) lrs = default_lrs();
  const auto rows = lr_sweep(c, lrs, threads);
  const std::string csv = render_sweep_csv(rows);
  if (c.output.empty()) {
    std::cout << csv;
  } else {
    write_text(std::filesystem::path(c.output) / "sweep.csv", csv);
  }
  const auto best = best_lr(rows);
  std::cerr << "best lr: " << (best ? format_number(*best) : std::string("none")) << "\n";
  return kOk;
}

int cmd_check(const std::string& suite) {
  const CheckReport report = run_check(suite);
  std::cout << render_report(report);
  return report.passed() ? kOk : kInvariantFailure;
}

int cmd_ode(const std::string& path, const GlobalFlags& flags) {
  const RunConfig c = load(path, flags);
  DinFlowSpec spec;
  spec.alpha = c.alpha;
  spec.beta = c.beta;
  spec.problem = build_problem(c);
  spec.t_end = c.t_end;
  spec.dt = c.dt;
  RngStream init_rng(c.seed, kInitStream);
  const Trajectory traj = rk4_integrate(spec, spec.problem->initial_point(init_rng));
  const std::string csv = render_trajectory_csv(traj, *spec.problem);
  if (c.output.empty()) {
    std::cout << csv;
  } else {
    write_text(std::filesystem::path(c.output) / "trajectory.csv", csv);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"INNAprop optimizer experiments"};
  app.require_subcommand(1);
  GlobalFlags flags;
  std::uint64_t seed = 0;
  std::string precision;
  std::string out;
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* precision_opt =
      app.add_option("--precision", precision, "parameter precision")->check(CLI::IsMember({"f32", "f64"}));
  auto* out_opt = app.add_option("--out", out, "output directory");

  std::string config_path;
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> lrs;
  unsigned threads = 0;
  bool per_cell = false;
  std::string suite;

  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("--config", config_path, "config file")->required();
  auto* grid = app.add_subcommand("grid", "run an (alpha, beta) grid");
  grid->add_option("--config", config_path, "config file")->required();
  grid->add_option("--alphas", alphas, "alpha values (default grid when omitted)");
  grid->add_option("--betas", betas, "beta values (default grid when omitted)");
  grid->add_option("--threads", threads, "worker threads, 0 = all cores");
  grid->add_flag("--cells", per_cell, "also write one CSV per cell");
  auto* sweep = app.add_subcommand("sweep", "sweep the initial learning rate");
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--lrs", lrs, "initial learning rates (default list when omitted)");
  sweep->add_option("--threads", threads, "worker threads, 0 = all cores");
  auto* check = app.add_subcommand("check", "run a verification suite");
  check->add_option("suite", suite, "suite name")->required()->check(CLI::IsMember(check_suites()));
  auto* ode = app.add_subcommand("ode", "integrate the continuous flow and export the trajectory");
  ode->add_option("--config", config_path, "config file")->required();
  for (auto* sub : {run, grid, sweep, check, ode}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (*seed_opt) flags.seed = seed;
  if (*precision_opt) flags.precision = precision;
  if (*out_opt) flags.out = out;

  try {
    if (*run) return cmd_run(config_path, flags);
    if (*grid) return cmd_grid(config_path, flags, alphas, betas, threads, per_cell);
    if (*sweep) return cmd_sweep(config_path, flags, lrs, threads);
    if (*check) return cmd_check(suite);
    if (*ode) return cmd_ode(config_path, flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvariantFailure;
  }
  return kConfigError;
}
