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

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "innaprop/errors.hpp"
#include "innaprop/harness/config.hpp"
#include "innaprop/harness/hash.hpp"
#include "innaprop/numerics.hpp"
#include "innaprop/ode.hpp"
#include "innaprop/optimizers.hpp"
#include "innaprop/problems.hpp"
#include "innaprop/schedulers.hpp"

namespace innaprop::harness {

/// Stream id of the initialization draw; the minibatch sampler uses its own.
inline constexpr std::uint64_t kInitStream = 0x494e4954;     // "INIT"
inline constexpr std::uint64_t kSamplerStream = 0x53414d50;  // "SAMP"

inline std::shared_ptr<const Dataset> build_dataset(const RunConfig& c) {
  if (!uses_dataset(c.problem)) return nullptr;
  if (c.dataset == DatasetSource::csv) {
    return std::make_shared<const Dataset>(load_csv_dataset(c.csv_path, c.label_column, c.split_fraction, c.seed));
  }
  const SyntheticKind kind =
      c.dataset == DatasetSource::two_gaussians ? SyntheticKind::two_gaussians : SyntheticKind::linear_regression;
  return std::make_shared<const Dataset>(
      generate_synthetic(kind, c.n_samples, c.n_features, c.seed, {c.test_fraction, c.separation, c.noise}));
}

inline std::shared_ptr<const Problem> build_problem(const RunConfig& c) {
  ProblemParams params;
  params.spectrum = c.spectrum;
  params.dim = c.dim;
  params.hidden = c.hidden;
  params.activation = c.activation;
  params.dataset = build_dataset(c);
  if (params.dataset && params.dataset->n_train() == 0) throw ConfigError("n_samples", "no training rows after split");
  if (c.problem == ProblemKind::logistic_regression && params.dataset->num_classes != 2) {
    throw ConfigError("dataset", "logistic_regression needs binary 0/1 labels");
  }
  if (c.problem == ProblemKind::tiny_mlp && params.dataset->num_classes < 2) {
    throw ConfigError("dataset", "tiny_mlp needs non-negative integer class labels");
  }
  return make_problem(c.problem, params);
}

/// Type-erased optimizer over parameters of precision T.
template <std::floating_point T>
class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual void step(const ParamVector<T>& g, double lr) = 0;
  [[nodiscard]] virtual const ParamVector<T>& theta() const = 0;
};

namespace detail {

inline InnapropConfig innaprop_config(const RunConfig& c) {
  return {c.alpha, c.beta, c.sigma, c.epsilon, c.weight_decay, c.bias_correction, c.grad_clip};
}

inline ReferenceParams reference_params(const RunConfig& c) {
  return {c.beta1, c.beta2, c.epsilon, c.weight_decay, c.bias_correction, c.alpha, c.beta};
}

inline ReferenceKind reference_kind(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return ReferenceKind::SGD;
    case OptimizerKind::momentum: return ReferenceKind::Momentum;
    case OptimizerKind::nesterov: return ReferenceKind::Nesterov;
    case OptimizerKind::rmsprop_momentum: return ReferenceKind::RMSpropMomentum;
    case OptimizerKind::adam: return ReferenceKind::Adam;
    case OptimizerKind::adamw: return ReferenceKind::AdamW;
    case OptimizerKind::nadam: return ReferenceKind::NAdam;
    case OptimizerKind::inna: return ReferenceKind::INNA;
    default: throw ContractViolation("reference_kind: not a reference method");
  }
}

template <std::floating_point T>
ParamVector<T> clipped(const ParamVector<T>& g, const std::optional<double>& clip) {
  return clip ? global_norm_clip(g, *clip) : g;
}

template <std::floating_point T>
class InnapropStepper final : public Stepper<T> {
 public:
  InnapropStepper(const RunConfig& c, const ParamVector<T>& theta0)
      : config_(innaprop_config(c)), plain_(c.optimizer == OptimizerKind::innaprop_plain),
        state_(innaprop_init(config_, theta0)) {}
  void step(const ParamVector<T>& g, double lr) override {
    state_ = plain_ ? innaprop_plain_step(std::move(state_), g, lr, config_)
                    : innaprop_step(std::move(state_), g, lr, config_);
  }
  const ParamVector<T>& theta() const override { return state_.theta; }

 private:
  InnapropConfig config_;
  bool plain_;
  InnapropState<T> state_;
};

template <std::floating_point T>
class MomentumVariantStepper final : public Stepper<T> {
 public:
  MomentumVariantStepper(const RunConfig& c, const ParamVector<T>& theta0)
      : config_(innaprop_config(c)), clip_(c.grad_clip), state_(innaprop_momentum_init(theta0, c.momentum_form)) {
    config_.bias_correction = false;
    config_.weight_decay = 0.0;
    config_.grad_clip.reset();
  }
  void step(const ParamVector<T>& g, double lr) override {
    state_ = innaprop_momentum_step(std::move(state_), clipped(g, clip_), lr, config_);
  }
  const ParamVector<T>& theta() const override { return state_.theta; }

 private:
  InnapropConfig config_;
  std::optional<double> clip_;
  MomentumVariantState<T> state_;
};

template <std::floating_point T>
class DinadamStepper final : public Stepper<T> {
 public:
  DinadamStepper(const RunConfig& c, const ParamVector<T>& theta0)
      : alpha_(c.alpha), beta_(c.beta), epsilon_(c.epsilon), clip_(c.grad_clip),
        state_(dinadam_init(theta0, c.beta1, c.beta2)) {}
  void step(const ParamVector<T>& g, double lr) override {
    state_ = dinadam_step(std::move(state_), clipped(g, clip_), lr, alpha_, beta_, epsilon_);
  }
  const ParamVector<T>& theta() const override { return state_.theta; }

 private:
  double alpha_;
  double beta_;
  double epsilon_;
  std::optional<double> clip_;
  DinadamState<T> state_;
};

template <std::floating_point T>
class ReferenceStepper final : public Stepper<T> {
 public:
  ReferenceStepper(const RunConfig& c, const ParamVector<T>& theta0)
      : params_(reference_params(c)), clip_(c.grad_clip),
        state_(reference_init(reference_kind(c.optimizer), theta0, params_)) {}
  void step(const ParamVector<T>& g, double lr) override {
    state_ = reference_step(std::move(state_), clipped(g, clip_), lr, params_);
  }
  const ParamVector<T>& theta() const override { return state_.theta; }

 private:
  ReferenceParams params_;
  std::optional<double> clip_;
  ReferenceState<T> state_;
};

}  // namespace detail

template <std::floating_point T>
std::unique_ptr<Stepper<T>> make_stepper(const RunConfig& c, const ParamVector<T>& theta0) {
  switch (c.optimizer) {
    case OptimizerKind::innaprop:
    case OptimizerKind::innaprop_plain:
      return std::make_unique<detail::InnapropStepper<T>>(c, theta0);
    case OptimizerKind::innaprop_momentum:
      return std::make_unique<detail::MomentumVariantStepper<T>>(c, theta0);
    case OptimizerKind::dinadam:
      return std::make_unique<detail::DinadamStepper<T>>(c, theta0);
    default:
      return std::make_unique<detail::ReferenceStepper<T>>(c, theta0);
  }
}

enum class RunStatus { ok, diverged };

inline std::string to_string(RunStatus s) { return s == RunStatus::ok ? "ok" : "diverged"; }

/// One CSV row. A diverged row carries a NaN loss and no metric.
struct RunRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  std::optional<double> test_metric;
  RunStatus status = RunStatus::ok;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct RunResult {
  RunConfig config;
  std::vector<RunRecord> records;
  RunStatus status = RunStatus::ok;
  std::optional<std::int64_t> diverged_step;
  std::int64_t total_steps = 0;
  std::int64_t steps_completed = 0;
  /// Step of the short-horizon snapshot (10% of the budget).
  std::int64_t short_step = 0;
  std::optional<double> short_train_loss;
  std::optional<double> short_test_metric;
  std::optional<double> final_train_loss;
  std::optional<double> final_test_metric;
  std::optional<double> best_test_metric;
  Vec64 final_theta;
  double wall_time_seconds = 0.0;
};

/// Total optimizer steps and the batches per epoch (1 for full batch or deterministic problems).
struct StepPlan {
  std::int64_t total_steps = 0;
  std::int64_t batches_per_epoch = 1;
  bool minibatch = false;
};

inline StepPlan plan_steps(const RunConfig& c, const Problem& problem) {
  StepPlan plan;
  const Dataset* data = problem.dataset();
  if (data != nullptr && c.batch_size > 0) {
    plan.minibatch = true;
    const std::size_t n = data->n_train();
    const std::size_t b = std::min(c.batch_size, n);
    plan.batches_per_epoch = static_cast<std::int64_t>((n + b - 1) / b);
  }
  plan.total_steps = c.budget_unit == BudgetUnit::epochs ? c.budget * plan.batches_per_epoch : c.budget;
  return plan;
}

/// Schedule index of the 1-based step k: k - 1, or the epoch of step k for epoch budgets.
inline std::int64_t schedule_index(const RunConfig& c, const StepPlan& plan, std::int64_t k) {
  return c.budget_unit == BudgetUnit::epochs ? (k - 1) / plan.batches_per_epoch : k - 1;
}

inline std::int64_t short_horizon_step(std::int64_t total_steps) {
  return std::max<std::int64_t>(1, (total_steps + 9) / 10);
}

namespace detail {

inline bool better(const Problem& p, double candidate, double incumbent) {
  return p.metric_higher_is_better() ? candidate > incumbent : candidate < incumbent;
}

template <std::floating_point T>
RunResult run_typed(const RunConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto problem = build_problem(c);
  const StepPlan plan = plan_steps(c, *problem);

  RunResult result;
  result.config = c;
  result.total_steps = plan.total_steps;
  result.short_step = short_horizon_step(plan.total_steps);

  RngStream init_rng(c.seed, kInitStream);
  const ParamVector<T> theta0 = problem->initial_point(init_rng).template cast<T>();
  std::optional<MiniBatchSampler> sampler;
  if (plan.minibatch) {
    sampler.emplace(problem->dataset()->n_train(), c.batch_size, c.sampler,
                    RngStream(c.seed, (kSamplerStream << 32) + c.stream));
  }

  auto log = [&](std::int64_t k, double lr, const Vec64& theta) {
    const Evaluation e = evaluate(*problem, theta.span(), k);
    result.records.push_back({k, lr, e.loss, e.metric, RunStatus::ok});
    if (e.metric && (!result.best_test_metric || better(*problem, *e.metric, *result.best_test_metric))) {
      result.best_test_metric = e.metric;
    }
    if (k == result.short_step) {
      result.short_train_loss = e.loss;
      result.short_test_metric = e.metric;
    }
    result.final_train_loss = e.loss;
    result.final_test_metric = e.metric;
  };

  std::int64_t k = 0;
  double lr = lr_at(c.schedule, 0);
  try {
    auto stepper = make_stepper<T>(c, theta0);
    log(0, lr, theta0.template cast<double>());
    for (k = 1; k <= plan.total_steps; ++k) {
      lr = lr_at(c.schedule, schedule_index(c, plan, k));
      const Vec64 theta = stepper->theta().template cast<double>();
      Vec64 g = sampler ? minibatch_grad(*problem, theta.span(), *sampler).grad : problem->grad(theta.span());
      if (!g.all_finite()) throw DivergenceError(k, "non-finite gradient");
      stepper->step(g.template cast<T>(), lr);
      result.steps_completed = k;
      if (k % c.log_every == 0 || k == plan.total_steps || k == result.short_step) {
        log(k, lr, stepper->theta().template cast<double>());
      }
    }
    result.final_theta = stepper->theta().template cast<double>();
  } catch (const DivergenceError&) {
    result.status = RunStatus::diverged;
  } catch (const DomainError&) {
    result.status = RunStatus::diverged;
  }
  if (result.status == RunStatus::diverged) {
    result.diverged_step = k;
    result.records.push_back({k, lr, std::numeric_limits<double>::quiet_NaN(), std::nullopt, RunStatus::diverged});
    result.final_train_loss.reset();
    result.final_test_metric.reset();
  }
  result.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace detail

/// Executes one training run. Divergence ends the run with a diverged status; it does not throw.
inline RunResult run_experiment(const RunConfig& config) {
  validate(config);
  return config.precision == Precision::F32 ? detail::run_typed<float>(config)
                                            : detail::run_typed<double>(config);
}

inline std::string format_optional(const std::optional<double>& x) { return x ? format_number(*x) : ""; }

inline std::string render_csv(const RunResult& r) {
  std::string out = "step,lr,train_loss,test_metric,status\n";
  for (const auto& row : r.records) {
    out += std::to_string(row.step) + ',' + format_number(row.lr) + ',' +
           (std::isfinite(row.train_loss) ? format_number(row.train_loss) : "nan") + ',' +
           format_optional(row.test_metric) + ',' + to_string(row.status) + '\n';
  }
  return out;
}

/// Columns t, theta_0 .. theta_{p-1}, loss; one row per integration step.
inline std::string render_trajectory_csv(const Trajectory& traj, const Problem& problem) {
  std::string out = "t";
  const std::size_t p = traj.theta.empty() ? 0 : traj.theta.front().size();
  for (std::size_t i = 0; i < p; ++i) out += ",theta_" + std::to_string(i);
  out += ",loss\n";
  for (std::size_t row = 0; row < traj.t.size(); ++row) {
    out += format_number(traj.t[row]);
    for (double x : traj.theta[row]) out += ',' + format_number(x);
    out += ',' + format_number(problem.loss(traj.theta[row].span())) + '\n';
  }
  return out;
}

inline json optional_json(const std::optional<double>& x) {
  return x && std::isfinite(*x) ? json(*x) : json(nullptr);
}

/// Git blob id of the canonical config, extended with the blob id of the CSV dataset when one is read.
inline std::string input_hash(const RunConfig& c) {
  std::string content = emit_config(c).dump();
  if (uses_dataset(c.problem) && c.dataset == DatasetSource::csv) {
    std::ifstream in(c.csv_path, std::ios::binary);
    if (!in) throw IoError("cannot read dataset '" + c.csv_path + "'");
    std::ostringstream data;
    data << in.rdbuf();
    content += "\n" + git_blob_sha1(data.str());
  }
  return git_blob_sha1(content);
}

inline json summary_json(const RunResult& r) {
  json j;
  j["config"] = emit_config(r.config);
  j["input_hash"] = input_hash(r.config);
  j["status"] = to_string(r.status);
  j["diverged_step"] = r.diverged_step ? json(*r.diverged_step) : json(nullptr);
  j["steps"] = r.total_steps;
  j["steps_completed"] = r.steps_completed;
  j["short_step"] = r.short_step;
  j["short_train_loss"] = optional_json(r.short_train_loss);
  j["short_test_metric"] = optional_json(r.short_test_metric);
  j["final_train_loss"] = optional_json(r.final_train_loss);
  j["final_test_metric"] = optional_json(r.final_test_metric);
  j["best_test_metric"] = optional_json(r.best_test_metric);
  j["wall_time_seconds"] = r.wall_time_seconds;
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Writes run.csv and summary.json under `dir`.
inline void write_run(const RunResult& r, const std::filesystem::path& dir) {
  write_text(dir / "run.csv", render_csv(r));
  write_text(dir / "summary.json", summary_json(r).dump(2) + "\n");
}

}  // namespace innaprop::harness
