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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "innaprop/errors.hpp"
#include "innaprop/harness/config.hpp"
#include "innaprop/numerics.hpp"
#include "innaprop/ode.hpp"
#include "innaprop/optimizers.hpp"
#include "innaprop/problems.hpp"
#include "innaprop/schedulers.hpp"

namespace innaprop::harness {

/// One measured quantity and the verdict against its bound.
struct CheckLine {
  std::string name;
  double observed = 0.0;
  std::string bound;
  bool pass = false;
  /// Informational lines never affect the suite verdict.
  bool informational = false;
};

struct CheckReport {
  std::string suite;
  std::vector<CheckLine> lines;

  [[nodiscard]] bool passed() const {
    return std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.informational || l.pass; });
  }

  void below(std::string name, double observed, double bound) {
    lines.push_back({std::move(name), observed, "< " + format_short(bound), observed < bound});
  }
  void at_most(std::string name, double observed, double bound) {
    lines.push_back({std::move(name), observed, "<= " + format_short(bound), observed <= bound});
  }
  void within(std::string name, double observed, double lo, double hi) {
    lines.push_back({std::move(name), observed, "in [" + format_short(lo) + ", " + format_short(hi) + "]",
                     observed >= lo && observed <= hi});
  }
  void at_least(std::string name, double observed, double bound) {
    lines.push_back({std::move(name), observed, ">= " + format_short(bound), observed >= bound});
  }
  void holds(std::string name, bool ok) { lines.push_back({std::move(name), ok ? 1.0 : 0.0, "holds", ok}); }
  void info(std::string name, double observed) { lines.push_back({std::move(name), observed, "info", true, true}); }
};

inline std::string render_report(const CheckReport& r) {
  std::string out;
  char buf[256];
  for (const auto& l : r.lines) {
    const char* tag = l.informational ? "INFO" : (l.pass ? "PASS" : "FAIL");
    std::snprintf(buf, sizeof buf, "%-4s  %-58s %-14.6g %s\n", tag, l.name.c_str(), l.observed, l.bound.c_str());
    out += buf;
  }
  out += "suite " + r.suite + (r.passed() ? ": PASS\n" : ": FAIL\n");
  return out;
}

// --- Shared fixtures -----------------------------------------------------

inline std::shared_ptr<const Dataset> check_gaussians(std::size_t n, std::uint64_t seed, std::size_t dim = 2) {
  return std::make_shared<const Dataset>(generate_synthetic(SyntheticKind::two_gaussians, n, dim, seed));
}

inline std::shared_ptr<const Dataset> check_regression(std::size_t n, std::size_t dim, std::uint64_t seed) {
  return std::make_shared<const Dataset>(
      generate_synthetic(SyntheticKind::linear_regression, n, dim, seed, {0.2, 3.0, 0.1}));
}

inline InnapropConfig check_config(double alpha, double beta, double lambda = 0.0) {
  InnapropConfig c;
  c.alpha = alpha;
  c.beta = beta;
  c.weight_decay = lambda;
  return c;
}

inline Vec64 grad_of(const Problem& p, const Vec64& theta) { return p.grad(theta.span()); }

// --- Equivalence measurements (max relative theta deviation over the run) ---

/// INNAprop(1, 1) against AdamW with beta1 = 0.
inline double adam_equivalence_error(const Problem& problem, const Vec64& theta0, double lambda, int steps,
                                     double gamma = 1e-3) {
  const auto cfg = check_config(1.0, 1.0, lambda);
  auto a = innaprop_init(cfg, theta0);
  auto b = reference_init(ReferenceKind::AdamW, theta0, {});
  double worst = 0.0;
  for (int k = 0; k < steps; ++k) {
    a = innaprop_step(a, grad_of(problem, a.theta), gamma, cfg);
    b = adamw_step(b, grad_of(problem, b.theta), gamma, 0.0, cfg.sigma, cfg.epsilon, lambda);
    worst = std::max(worst, max_rel_error(a.theta, b.theta));
  }
  return worst;
}

/// Six-slot recursion after its forced bootstrap against the three-slot form.
inline double naive_reduced_error(const Problem& problem, const Vec64& theta0, const InnapropConfig& cfg,
                                  double gamma, int steps) {
  auto reduced = innaprop_init(cfg, theta0);
  const Vec64 g0 = grad_of(problem, theta0);
  auto naive = innaprop_naive_bootstrap(theta0, g0, gamma, cfg);
  reduced = innaprop_plain_step(reduced, g0, gamma, cfg);
  double worst = max_rel_error(naive.theta_curr, reduced.theta);
  for (int k = 1; k < steps; ++k) {
    naive = innaprop_naive_step(naive, grad_of(problem, naive.theta_curr), gamma, cfg);
    reduced = innaprop_plain_step(reduced, grad_of(problem, reduced.theta), gamma, cfg);
    worst = std::max(worst, max_rel_error(naive.theta_curr, reduced.theta));
  }
  return worst;
}

/// INNA with psi_k in the theta update against the psi_{k+1} rewrite.
inline double inna_rewrite_error(const Problem& problem, const Vec64& theta0, double alpha, double beta,
                                 double gamma, int steps) {
  ReferenceParams p;
  p.alpha = alpha;
  p.beta = beta;
  auto a = reference_init(ReferenceKind::INNA, theta0, p);
  auto b = a;
  double worst = 0.0;
  for (int k = 0; k < steps; ++k) {
    a = inna_step(a, grad_of(problem, a.theta), gamma, alpha, beta);
    b = inna_reduced_step(b, grad_of(problem, b.theta), gamma, alpha, beta);
    worst = std::max(worst, max_rel_error(a.theta, b.theta));
  }
  return worst;
}

/// Momentum variant: direct m against the reduced m-tilde form.
inline double momentum_forms_error(const Problem& problem, const Vec64& theta0, const InnapropConfig& cfg,
                                   double gamma, int steps) {
  auto direct = innaprop_momentum_init(theta0, MomentumForm::direct);
  auto reduced = innaprop_momentum_init(theta0, MomentumForm::reduced);
  double worst = 0.0;
  for (int k = 0; k < steps; ++k) {
    direct = innaprop_momentum_step(direct, grad_of(problem, direct.theta), gamma, cfg);
    reduced = innaprop_momentum_step(reduced, grad_of(problem, reduced.theta), gamma, cfg);
    worst = std::max(worst, max_rel_error(direct.theta, reduced.theta));
  }
  return worst;
}

/// DINAdam(alpha = 1, beta = 0) against Adam without bias correction.
inline double dinadam_adam_error(const Problem& problem, const Vec64& theta0, int steps, double gamma = 1e-3) {
  ReferenceParams p;
  p.bias_correction = false;
  auto adam = reference_init(ReferenceKind::Adam, theta0, p);
  auto din = dinadam_init(theta0, p.beta1, p.beta2);
  double worst = 0.0;
  for (int k = 0; k < steps; ++k) {
    adam = adam_step(adam, grad_of(problem, adam.theta), gamma, p);
    din = dinadam_step(din, grad_of(problem, din.theta), gamma, 1.0, 0.0, p.epsilon);
    worst = std::max(worst, max_rel_error(adam.theta, din.theta));
  }
  return worst;
}

/// DINAdam direct form (m with g_{k-1}) against the m-tilde form.
inline double dinadam_forms_error(const Problem& problem, const Vec64& theta0, double alpha, double beta,
                                  int steps, double gamma = 1e-3) {
  auto a = dinadam_init(theta0, 0.9, 0.999);
  auto b = dinadam_direct_init(theta0, 0.9, 0.999);
  double worst = 0.0;
  for (int k = 0; k < steps; ++k) {
    a = dinadam_step(a, grad_of(problem, a.theta), gamma, alpha, beta);
    b = dinadam_direct_step(b, grad_of(problem, b.theta), gamma, alpha, beta);
    worst = std::max(worst, max_rel_error(a.theta, b.theta));
  }
  return worst;
}

/// Largest displacement any optimizer produces under zero gradients (lambda = 0),
/// over the default (alpha, beta) grid and random starting points.
inline double zero_gradient_drift(int trials = 5, int steps = 5) {
  RngStream rng(12, 0);
  double worst = 0.0;
  auto drift = [&](const Vec64& a, const Vec64& b) {
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  };
  for (int trial = 0; trial < trials; ++trial) {
    Vec64 theta0(4);
    for (auto& x : theta0) x = 2.0 * rng.normal();
    const Vec64 zero(4);
    for (double alpha : default_grid()) {
      for (double beta : default_grid()) {
        const double gamma = std::min(1e-2, 0.5 * beta);
        const auto cfg = check_config(alpha, beta);
        ReferenceParams ip;
        ip.alpha = alpha;
        ip.beta = beta;
        auto a = innaprop_init(cfg, theta0);
        auto r = reference_init(ReferenceKind::INNA, theta0, ip);
        auto n = innaprop_naive_bootstrap(theta0, zero, gamma, cfg);
        auto d = dinadam_init(theta0, 0.9, 0.999);
        for (int k = 0; k < steps; ++k) {
          a = innaprop_step(a, zero, gamma, cfg);
          r = inna_step(r, zero, gamma, alpha, beta);
          n = innaprop_naive_step(n, zero, gamma, cfg);
          d = dinadam_step(d, zero, gamma, alpha, beta);
        }
        drift(a.theta, theta0);
        drift(r.theta, theta0);
        drift(n.theta_curr, theta0);
        drift(d.theta, theta0);
        if (alpha * gamma != 1.0) {
          for (auto form : {MomentumForm::direct, MomentumForm::reduced}) {
            auto m = innaprop_momentum_init(theta0, form);
            for (int k = 0; k < steps; ++k) m = innaprop_momentum_step(m, zero, gamma, cfg);
            drift(m.theta, theta0);
          }
        }
      }
    }
    for (auto kind : {ReferenceKind::SGD, ReferenceKind::Momentum, ReferenceKind::Nesterov,
                      ReferenceKind::RMSpropMomentum, ReferenceKind::Adam, ReferenceKind::AdamW,
                      ReferenceKind::NAdam}) {
      auto s = reference_init(kind, theta0, {});
      for (int k = 0; k < steps; ++k) s = reference_step(s, zero, 1e-2, ReferenceParams{});
      drift(s.theta, theta0);
    }
  }
  return worst;
}

/// True when every ill-posed setup is refused before any update happens.
inline bool ill_posed_setups_rejected() {
  int refused = 0;
  // Config level: cosine schedule peaking at 1.0 against beta = 0.9.
  try {
    (void)parse_config_text(
        R"({"problem":"quadratic","optimizer":"innaprop","alpha":0.1,"beta":0.9,"lr":1.0,"schedule":"cosine","steps":10})");
  } catch (const ConfigError& e) {
    refused += e.key() == "beta";
  }
  // Warmup peak equal to beta.
  try {
    (void)parse_config_text(
        R"({"problem":"quadratic","optimizer":"inna","alpha":0.5,"beta":0.1,"lr":0.1,"schedule":"linear_warmup","t_warmup":5,"steps":20})");
  } catch (const ConfigError& e) {
    refused += e.key() == "beta";
  }
  // Step level: gamma = beta.
  const auto cfg = check_config(0.1, 0.9);
  auto s = innaprop_init(cfg, Vec64{1.0});
  try {
    (void)innaprop_step(s, Vec64{1.0}, 0.9, cfg);
  } catch (const WellPosednessError&) {
    ++refused;
  }
  auto n = innaprop_naive_bootstrap(Vec64{1.0}, Vec64{1.0}, 0.1, cfg);
  try {
    (void)innaprop_naive_step(n, Vec64{1.0}, 1.0, cfg);
  } catch (const WellPosednessError&) {
    ++refused;
  }
  return refused == 4;
}

// --- Scheduler measurements -----------------------------------------------

inline double ulps_between(double a, double b) {
  if (a == b) return 0.0;
  const double scale = std::max(std::abs(a), std::abs(b));
  const double ulp = std::nextafter(scale, std::numeric_limits<double>::infinity()) - scale;
  return std::abs(a - b) / ulp;
}

struct SpotValue {
  ScheduleSpec spec;
  std::int64_t k;
  double expected;
};

inline std::vector<SpotValue> schedule_spot_values() {
  const ScheduleSpec cosine{ScheduleKind::cosine, 1e-3, 0.0, 200, 0, 200};
  const ScheduleSpec warm{ScheduleKind::cosine_warmup, 1e-3, 0.0, 300, 30, 250};
  const ScheduleSpec linear{ScheduleKind::linear_warmup, 1e-3, 0.0, 10000, 500, 10000};
  return {{cosine, 0, 1e-3},  {cosine, 200, 0.0}, {cosine, 100, 5e-4},    {warm, 15, 5e-4},
          {warm, 30, 1e-3},   {warm, 0, 0.0},     {linear, 10000, 0.0},   {linear, 500, 1e-3}};
}

/// Worst spot-value error in ulps of the expected value.
inline double schedule_spot_error_ulps() {
  double worst = 0.0;
  for (const auto& s : schedule_spot_values()) worst = std::max(worst, ulps_between(lr_at(s.spec, s.k), s.expected));
  return worst;
}

inline std::vector<ScheduleSpec> warmup_specs() {
  return {{ScheduleKind::cosine_warmup, 1e-3, 0.0, 300, 30, 250},
          {ScheduleKind::linear_warmup, 1e-3, 0.0, 10000, 500, 10000},
          {ScheduleKind::linear_warmup, 6e-4, 0.0, 100000, 500, 100000},
          {ScheduleKind::cosine_warmup, 6e-4, 0.0, 100000, 500, 100000},
          {ScheduleKind::cosine_warmup, 2e-4, 0.0, 5000, 777, 4000}};
}

/// Worst deviation, in ulps of lr_at(k), of a warmup increment from gamma0 / t_warmup.
inline double warmup_linearity_ulps() {
  double worst = 0.0;
  for (const auto& s : warmup_specs()) {
    const long double slope = static_cast<long double>(s.gamma0) / static_cast<long double>(s.t_warmup);
    for (std::int64_t k = 1; k < s.t_warmup; ++k) {
      const double now = lr_at(s, k);
      const long double diff = static_cast<long double>(now - lr_at(s, k - 1));
      const double ulp = std::nextafter(now, std::numeric_limits<double>::infinity()) - now;
      worst = std::max(worst, static_cast<double>(std::abs(diff - slope) / ulp));
    }
  }
  return worst;
}

/// Number of increases along every cosine branch (0 when monotone).
inline double cosine_increases() {
  std::int64_t increases = 0;
  const std::vector<ScheduleSpec> specs{{ScheduleKind::cosine, 1e-3, 0.0, 200, 0, 200},
                                        {ScheduleKind::cosine, 6e-4, 6e-5, 100000, 0, 100000},
                                        {ScheduleKind::cosine, 1.0, 0.0, 7, 0, 7}};
  for (const auto& s : specs) {
    for (std::int64_t k = 1; k <= s.t_max; ++k) increases += lr_at(s, k) > lr_at(s, k - 1);
  }
  for (const auto& s : warmup_specs()) {
    if (s.kind != ScheduleKind::cosine_warmup) continue;
    for (std::int64_t k = s.t_warmup + 1; k <= s.t_max; ++k) increases += lr_at(s, k) > lr_at(s, k - 1);
  }
  return static_cast<double>(increases);
}

// --- Gradient fidelity ------------------------------------------------------

struct FidelityCase {
  std::shared_ptr<const Problem> problem;
  std::function<Vec64(RngStream&)> point;
};

inline std::vector<FidelityCase> fidelity_cases() {
  auto normal = [](std::size_t n, double scale) {
    return [n, scale](RngStream& r) {
      Vec64 v(n);
      for (auto& x : v) x = scale * r.normal();
      return v;
    };
  };
  std::vector<FidelityCase> cases;
  cases.push_back({std::make_shared<QuadraticProblem>(std::vector<double>{1.0, 10.0, 100.0}), normal(3, 1.0)});
  cases.push_back({std::make_shared<RosenbrockProblem>(4), [](RngStream& r) {
                     Vec64 v(4);
                     for (auto& x : v) x = r.uniform(-2.0, 2.0);
                     return v;
                   }});
  cases.push_back({std::make_shared<LogisticRegressionProblem>(check_gaussians(80, 3, 3)), normal(4, 1.0)});
  cases.push_back({std::make_shared<LeastSquaresProblem>(check_regression(60, 3, 4)), normal(4, 1.0)});
  auto mlp = std::make_shared<TinyMlpProblem>(check_gaussians(40, 5), std::vector<std::size_t>{2, 8, 2},
                                              Activation::tanh);
  cases.push_back({mlp, [mlp](RngStream& r) { return mlp->initial_point(r); }});
  auto deep = std::make_shared<TinyMlpProblem>(check_gaussians(40, 6), std::vector<std::size_t>{2, 6, 5, 2},
                                               Activation::tanh);
  cases.push_back({deep, normal(deep->dim(), 0.7)});
  auto relu = std::make_shared<TinyMlpProblem>(check_gaussians(40, 7), std::vector<std::size_t>{2, 8, 2},
                                               Activation::relu);
  cases.push_back({relu, [relu](RngStream& r) { return relu->initial_point(r); }});
  return cases;
}

/// Worst analytic-vs-central-difference relative error over `points` seeded points.
inline double gradient_fidelity_error(const FidelityCase& c, int points = 100) {
  RngStream rng(2024, 0);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const Vec64 theta = c.point(rng);
    worst = std::max(worst, max_rel_error(fd_gradient(*c.problem, theta), c.problem->grad(theta.span())));
  }
  return worst;
}

// --- ODE consistency ------------------------------------------------------

inline DinFlowSpec check_flow(double alpha, double beta, double t_end, double dt) {
  DinFlowSpec s;
  s.alpha = alpha;
  s.beta = beta;
  s.problem = std::make_shared<QuadraticProblem>(std::vector<double>{1.0, 10.0});
  s.t_end = t_end;
  s.dt = dt;
  return s;
}

inline double check_richardson_ratio() { return richardson_ratio(check_flow(1.0, 1.0, 2.0, 0.05), Vec64{1.0, 1.0}); }

/// gap(gamma) / gap(gamma / 2) for INNA against the flow; about 2 for a first-order scheme.
inline double check_gap_ratio() {
  const auto spec = check_flow(1.0, 1.0, 1.0, 1e-3);
  const Vec64 theta0{1.0, 1.0};
  return discretization_gap(spec, 0.01, theta0) / discretization_gap(spec, 0.005, theta0);
}

// --- Momentum-variant instability in single precision ----------------------

struct InstabilityReport {
  /// Fraction of m-tilde coordinate updates that leave the stored value unchanged.
  double mtilde_noop_fraction = 0.0;
  /// Fraction of coordinate updates where the change in m-tilde is invisible in
  /// theta - m-tilde, that is the momentum increment is rounded away against theta.
  double absorbed_fraction = 0.0;
  double f64_initial_loss = 0.0;
  double f64_final_loss = 0.0;
  double f32_final_loss = 0.0;
  std::int64_t steps = 0;
};

/// Reduced momentum variant with alpha = 0.1, beta = 0.9, gamma = 1e-4 on a quadratic
/// with |theta_i| near 1, run in F32 and F64 from the same start.
inline InstabilityReport measure_instability(int steps = 2000, std::size_t dim = 64) {
  std::vector<double> spectrum(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    spectrum[i] = std::pow(10.0, -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(dim - 1));
  }
  const QuadraticProblem quad(spectrum);
  RngStream rng(7, 0);
  Vec64 theta0(dim);
  for (auto& x : theta0) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.9, 1.1);
  const auto cfg = check_config(0.1, 0.9);
  const double gamma = 1e-4;

  InstabilityReport rep;
  rep.steps = steps;
  rep.f64_initial_loss = quad.loss(theta0.span());

  auto s64 = innaprop_momentum_init(theta0, MomentumForm::reduced);
  auto s32 = innaprop_momentum_init(theta0.cast<float>(), MomentumForm::reduced);
  std::int64_t noop = 0;
  std::int64_t absorbed = 0;
  std::int64_t total = 0;
  for (int k = 0; k < steps; ++k) {
    s64 = innaprop_momentum_step(s64, grad_of(quad, s64.theta), gamma, cfg);
    const Vec64 theta = s32.theta.cast<double>();
    const Vec32 g = grad_of(quad, theta).cast<float>();
    const Vec32 theta_before = s32.theta;
    const Vec32 m_before = s32.m_or_mtilde;
    s32 = innaprop_momentum_step(s32, g, gamma, cfg);
    for (std::size_t i = 0; i < dim; ++i) {
      ++total;
      noop += s32.m_or_mtilde[i] == m_before[i];
      const float with_new = theta_before[i] - s32.m_or_mtilde[i];
      const float with_old = theta_before[i] - m_before[i];
      absorbed += with_new == with_old;
    }
  }
  rep.mtilde_noop_fraction = static_cast<double>(noop) / static_cast<double>(total);
  rep.absorbed_fraction = static_cast<double>(absorbed) / static_cast<double>(total);
  rep.f64_final_loss = quad.loss(s64.theta.span());
  rep.f32_final_loss = quad.loss(s32.theta.cast<double>().span());
  return rep;
}

// --- Suites -----------------------------------------------------------------

inline CheckReport check_equivalence() {
  CheckReport r{"equivalence", {}};
  const RosenbrockProblem rosen(2);
  const TinyMlpProblem mlp(check_gaussians(64, 9), {2, 8, 2}, Activation::tanh);
  RngStream rng(9, 3);
  const Vec64 mlp0 = mlp.initial_point(rng);
  for (double lambda : {0.0, 0.01}) {
    const std::string tag = " lambda=" + format_number(lambda);
    r.below("innaprop(1,1) vs adamw(beta1=0) rosenbrock" + tag,
            adam_equivalence_error(rosen, Vec64{-1.2, 1.0}, lambda, 1000), 1e-12);
    r.below("innaprop(1,1) vs adamw(beta1=0) tiny_mlp" + tag, adam_equivalence_error(mlp, mlp0, lambda, 1000),
            1e-12);
  }
  const QuadraticProblem quad({1.0, 10.0, 0.1});
  r.below("six-slot vs three-slot quadratic (0.1,0.9)",
          naive_reduced_error(quad, Vec64{1.0, -0.5, 2.0}, check_config(0.1, 0.9), 0.01, 500), 1e-10);
  r.below("six-slot vs three-slot quadratic (2,2)",
          naive_reduced_error(quad, Vec64{1.0, -0.5, 2.0}, check_config(2.0, 2.0), 0.01, 500), 1e-10);
  r.below("six-slot vs three-slot rosenbrock (0.1,0.9)",
          naive_reduced_error(rosen, Vec64{-1.2, 1.0}, check_config(0.1, 0.9), 1e-3, 500), 1e-10);
  r.below("inna psi_k vs psi_k+1 form rosenbrock",
          inna_rewrite_error(rosen, Vec64{-1.2, 1.0}, 0.5, 0.1, 1e-3, 100), 1e-12);
  r.below("inna psi_k vs psi_k+1 form quadratic",
          inna_rewrite_error(quad, Vec64{1.0, -0.5, 2.0}, 2.0, 2.0, 1e-2, 100), 1e-12);
  r.below("momentum variant direct vs reduced rosenbrock",
          momentum_forms_error(rosen, Vec64{-1.2, 1.0}, check_config(0.1, 0.9), 1e-3, 200), 1e-10);
  r.below("dinadam(1,0) vs adam without bias correction",
          dinadam_adam_error(rosen, Vec64{-1.2, 1.0}, 500), 1e-12);
  r.below("dinadam direct vs m-tilde form", dinadam_forms_error(rosen, Vec64{-1.2, 1.0}, 0.5, 0.8, 500), 1e-12);
  const double drift = zero_gradient_drift();
  r.lines.push_back({"zero-gradient drift, every optimizer", drift, "== 0", drift == 0.0});
  r.holds("ill-posed setups rejected before compute", ill_posed_setups_rejected());
  return r;
}

inline CheckReport check_gradients() {
  CheckReport r{"gradients", {}};
  for (const auto& c : fidelity_cases()) {
    r.below(c.problem->name() + " dim=" + std::to_string(c.problem->dim()) + " analytic vs central difference",
            gradient_fidelity_error(c), 1e-6);
  }
  return r;
}

inline CheckReport check_schedulers() {
  CheckReport r{"schedulers", {}};
  r.at_most("spot values, error in ulps", schedule_spot_error_ulps(), 1.0);
  r.at_most("warmup increments vs gamma0/t_warmup, ulps", warmup_linearity_ulps(), 1.0);
  r.at_most("cosine branch increases", cosine_increases(), 0.0);
  return r;
}

inline CheckReport check_ode() {
  CheckReport r{"ode", {}};
  r.within("rk4 richardson ratio", check_richardson_ratio(), 8.0, 32.0);
  r.within("inna vs flow gap ratio under step halving", check_gap_ratio(), 1.5, 3.0);
  auto tiny = check_flow(1.0, 1.0, 1.0, 1e-4);
  r.below("inna vs flow gap at gamma=1e-4", discretization_gap(tiny, 1e-4, Vec64{1.0, 1.0}), 1e-3);
  return r;
}

inline CheckReport check_instability(const InstabilityReport& m) {
  CheckReport r{"instability", {}};
  r.at_least("f32 m-tilde updates that are exact no-ops", m.mtilde_noop_fraction, 0.9);
  r.below("f64 twin final/initial loss", m.f64_final_loss / m.f64_initial_loss, 1.0);
  r.info("f32 m-tilde increments absorbed against theta", m.absorbed_fraction);
  r.info("f32 final/initial loss", m.f32_final_loss / m.f64_initial_loss);
  return r;
}

inline CheckReport check_instability() { return check_instability(measure_instability()); }

inline const std::vector<std::string>& check_suites() {
  static const std::vector<std::string> suites{"equivalence", "gradients", "schedulers", "ode", "instability"};
  return suites;
}

inline CheckReport run_check(const std::string& suite) {
  if (suite == "equivalence") return check_equivalence();
  if (suite == "gradients") return check_gradients();
  if (suite == "schedulers") return check_schedulers();
  if (suite == "ode") return check_ode();
  if (suite == "instability") return check_instability();
  throw ConfigError("suite", "unknown suite '" + suite + "'");
}

}  // namespace innaprop::harness
