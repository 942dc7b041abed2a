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
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "innaprop/errors.hpp"
#include "innaprop/numerics.hpp"
#include "innaprop/optim/reference.hpp"
#include "innaprop/problems.hpp"

namespace innaprop {

/// First-order (theta, psi) form of the inertial Newton flow:
///   theta' = ((1 - alpha beta) theta - psi) / beta - beta grad J(theta)
///   psi'   = ((1 - alpha beta) theta - psi) / beta
struct DinFlowSpec {
  double alpha = 0.5;
  double beta = 0.1;
  std::shared_ptr<const Problem> problem;
  double t_end = 1.0;
  double dt = 1e-3;

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ContractViolation("ode: alpha must be >= 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ContractViolation("ode: beta must be > 0");
    if (!problem) throw ContractViolation("ode: problem is required");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ContractViolation("ode: t_end must be > 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ContractViolation("ode: dt must be > 0");
  }
};

struct FlowDerivative {
  Vec64 dtheta;
  Vec64 dpsi;
};

inline FlowDerivative din_rhs(const Vec64& theta, const Vec64& psi, const DinFlowSpec& spec) {
  if (theta.size() != psi.size() || theta.size() != spec.problem->dim()) {
    throw ContractViolation("din_rhs: dimension mismatch");
  }
  const Vec64 g = spec.problem->grad(theta.span());
  if (!g.all_finite()) throw DomainError("din_rhs: non-finite gradient");
  const double c = 1.0 - spec.alpha * spec.beta;
  FlowDerivative d{Vec64(theta.size()), Vec64(theta.size())};
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double common = (c * theta[i] - psi[i]) / spec.beta;
    d.dtheta[i] = common - spec.beta * g[i];
    d.dpsi[i] = common;
  }
  return d;
}

struct Trajectory {
  std::vector<double> t;
  std::vector<Vec64> theta;
  std::vector<Vec64> psi;
};

namespace detail {

inline Vec64 axpy(const Vec64& y, double a, const Vec64& x) {
  Vec64 out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * x[i];
  return out;
}

/// One classical RK4 step of size h, in place.
inline void rk4_step(Vec64& theta, Vec64& psi, double h, const DinFlowSpec& spec) {
  const auto k1 = din_rhs(theta, psi, spec);
  const auto k2 = din_rhs(axpy(theta, h / 2, k1.dtheta), axpy(psi, h / 2, k1.dpsi), spec);
  const auto k3 = din_rhs(axpy(theta, h / 2, k2.dtheta), axpy(psi, h / 2, k2.dpsi), spec);
  const auto k4 = din_rhs(axpy(theta, h, k3.dtheta), axpy(psi, h, k3.dpsi), spec);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] += h / 6 * (k1.dtheta[i] + 2 * k2.dtheta[i] + 2 * k3.dtheta[i] + k4.dtheta[i]);
    psi[i] += h / 6 * (k1.dpsi[i] + 2 * k2.dpsi[i] + 2 * k3.dpsi[i] + k4.dpsi[i]);
  }
}

inline std::int64_t whole_steps(double t_end, double dt, const char* op) {
  const double ratio = t_end / dt;
  const auto n = static_cast<std::int64_t>(std::llround(ratio));
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio)) {
    throw ContractViolation(std::string(op) + ": step must divide t_end");
  }
  return n;
}

inline Vec64 equilibrium_psi(const Vec64& theta, double alpha, double beta) {
  const double c = 1.0 - alpha * beta;
  Vec64 psi(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) psi[i] = c * theta[i];
  return psi;
}

}  // namespace detail

/// Integrates from t=0 to t_end with fixed steps dt; psi0 defaults to (1 - alpha beta) theta0.
inline Trajectory rk4_integrate(const DinFlowSpec& spec, const Vec64& theta0,
                                const std::optional<Vec64>& psi0 = std::nullopt) {
  spec.validate();
  const std::int64_t n = detail::whole_steps(spec.t_end, spec.dt, "rk4_integrate");
  Vec64 theta = theta0;
  Vec64 psi = psi0 ? *psi0 : detail::equilibrium_psi(theta0, spec.alpha, spec.beta);
  Trajectory out;
  out.t.reserve(static_cast<std::size_t>(n + 1));
  out.t.push_back(0.0);
  out.theta.push_back(theta);
  out.psi.push_back(psi);
  for (std::int64_t k = 1; k <= n; ++k) {
    detail::rk4_step(theta, psi, spec.dt, spec);
    if (!theta.all_finite() || !psi.all_finite()) throw DivergenceError(k, "rk4_integrate: non-finite state");
    out.t.push_back(static_cast<double>(k) * spec.dt);
    out.theta.push_back(theta);
    out.psi.push_back(psi);
  }
  return out;
}

/// |y(dt) - y(dt/2)| / |y(dt/2) - y(dt/4)| at t_end; about 16 for a fourth-order method.
inline double richardson_ratio(const DinFlowSpec& spec, const Vec64& theta0) {
  auto final_state = [&](double dt) {
    DinFlowSpec s = spec;
    s.dt = dt;
    return rk4_integrate(s, theta0).theta.back();
  };
  const Vec64 a = final_state(spec.dt);
  const Vec64 b = final_state(spec.dt / 2);
  const Vec64 c = final_state(spec.dt / 4);
  return l2_norm(sub(a, b)) / l2_norm(sub(b, c));
}

/// max_k |theta_INNA(k) - theta_flow(k gamma)| over k gamma <= t_end, both started at
/// (theta0, (1 - alpha beta) theta0). The flow is resolved with RK4 substeps no longer than spec.dt.
inline double discretization_gap(const DinFlowSpec& spec, double gamma, const Vec64& theta0) {
  spec.validate();
  if (!(gamma > 0.0) || !(gamma < spec.beta)) {
    throw WellPosednessError("discretization_gap: need 0 < gamma < beta");
  }
  const auto steps = static_cast<std::int64_t>(std::floor(spec.t_end / gamma + 1e-9));
  const auto substeps = static_cast<std::int64_t>(std::ceil(gamma / spec.dt - 1e-9));
  const double h = gamma / static_cast<double>(substeps);

  ReferenceParams params;
  params.alpha = spec.alpha;
  params.beta = spec.beta;
  auto discrete = reference_init(ReferenceKind::INNA, theta0, params);
  Vec64 theta = theta0;
  Vec64 psi = detail::equilibrium_psi(theta0, spec.alpha, spec.beta);

  double gap = 0.0;
  for (std::int64_t k = 1; k <= steps; ++k) {
    const Vec64 g = spec.problem->grad(discrete.theta.span());
    discrete = inna_step(std::move(discrete), g, gamma, spec.alpha, spec.beta);
    for (std::int64_t j = 0; j < substeps; ++j) detail::rk4_step(theta, psi, h, spec);
    if (!theta.all_finite()) throw DivergenceError(k, "discretization_gap: non-finite flow state");
    gap = std::max(gap, l2_norm(sub(discrete.theta, theta)));
  }
  return gap;
}

}  // namespace innaprop
