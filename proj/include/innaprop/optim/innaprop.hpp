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

// INNAprop: INNA (the first-order (theta, psi) discretization of the dynamical
// inertial Newton flow) driven by the RMSprop direction g / (sqrt(v_hat) + eps).
//
// State is the three slots (theta, psi, v). With c = 1 - alpha*beta:
//
//   v     <- sigma v + (1 - sigma) g^2
//   psi'  <- (1 - gamma/beta) psi + gamma (1/beta - alpha) theta
//   theta <- (1 + gamma c / (beta - gamma)) theta - gamma/(beta - gamma) psi'
//            - gamma beta g / (sqrt(v_hat) + eps)
//
// Both updates are evaluated in the algebraically equal form built on the
// residual (c theta - psi), so a critical point with psi = c theta is an exact
// fixed point in floating point, not just up to rounding.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>

#include "innaprop/numerics.hpp"
#include "innaprop/optim/common.hpp"

namespace innaprop {

struct InnapropConfig {
  double alpha = 0.1;
  double beta = 0.9;
  double sigma = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  bool bias_correction = true;
  std::optional<double> grad_clip;

  friend bool operator==(const InnapropConfig&, const InnapropConfig&) = default;
};

inline void validate(const InnapropConfig& c) {
  auto fail = [](const char* what) { throw ContractViolation(std::string("innaprop config: ") + what); };
  if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) fail("alpha must be >= 0");
  if (!(c.beta > 0.0) || !std::isfinite(c.beta)) fail("beta must be > 0");
  if (!(c.sigma >= 0.0 && c.sigma <= 1.0)) fail("sigma must lie in [0, 1]");
  if (c.bias_correction && c.sigma == 1.0) fail("sigma = 1 makes the bias corrector vanish");
  if (!(c.epsilon >= 0.0) || !std::isfinite(c.epsilon)) fail("epsilon must be >= 0");
  if (!(c.weight_decay >= 0.0) || !std::isfinite(c.weight_decay)) fail("weight decay must be >= 0");
  if (c.grad_clip && !(*c.grad_clip > 0.0)) fail("grad_clip must be positive");
}

template <std::floating_point T>
struct InnapropState {
  ParamVector<T> theta;
  ParamVector<T> psi;
  ParamVector<T> v;
  std::int64_t k = 0;

  friend bool operator==(const InnapropState&, const InnapropState&) = default;
};

namespace detail {

template <std::floating_point T>
T inertia_coefficient(const InnapropConfig& c) {
  return static_cast<T>(1.0 - c.alpha * c.beta);
}

inline void require_well_posed(double gamma, double beta, const char* op) {
  require_step_size(gamma, op);
  if (!(gamma < beta)) {
    throw WellPosednessError(std::string(op) + ": step size " + std::to_string(gamma) +
                             " must stay below beta = " + std::to_string(beta));
  }
}

}  // namespace detail

/// v = 0, psi = (1 - alpha beta) theta0, k = 0.
template <std::floating_point T>
InnapropState<T> innaprop_init(const InnapropConfig& config, const ParamVector<T>& theta0) {
  validate(config);
  const T c = detail::inertia_coefficient<T>(config);
  InnapropState<T> s{theta0, ParamVector<T>(theta0.size()), ParamVector<T>(theta0.size()), 0};
  for (std::size_t i = 0; i < theta0.size(); ++i) s.psi[i] = c * theta0[i];
  return s;
}

/// One deep-learning INNAprop update: optional clipping, decoupled weight decay,
/// RMS accumulation with optional bias correction, then psi and theta.
/// `g` must be the gradient at state.theta before decay.
template <std::floating_point T>
InnapropState<T> innaprop_step(InnapropState<T> state, ParamVector<T> g, double gamma,
                               const InnapropConfig& config) {
  validate(config);
  detail::require_well_posed(gamma, config.beta, "innaprop_step");
  const std::size_t p = state.theta.size();
  detail::require_dims<T>(p, "innaprop_step", state.psi, state.v, g);
  const std::int64_t k = state.k + 1;
  if (!g.all_finite()) throw DivergenceError(k, "innaprop_step: non-finite gradient");
  if (config.grad_clip) g = global_norm_clip(g, *config.grad_clip);

  const T decay = static_cast<T>(1.0 - config.weight_decay * gamma);
  const T sigma = static_cast<T>(config.sigma);
  const T one_minus_sigma = static_cast<T>(1.0 - config.sigma);
  const T corrector =
      config.bias_correction ? static_cast<T>(detail::bias_corrector(config.sigma, k)) : T(1);
  const T eps = static_cast<T>(config.epsilon);
  const T c = detail::inertia_coefficient<T>(config);
  const T psi_rate = static_cast<T>(gamma / config.beta);
  const T theta_rate = static_cast<T>(gamma / (config.beta - gamma));
  const T rms_rate = static_cast<T>(gamma * config.beta);

  for (std::size_t i = 0; i < p; ++i) {
    T theta = decay * state.theta[i];
    T v = sigma * state.v[i] + one_minus_sigma * g[i] * g[i];
    const T v_hat = v / corrector;
    const T psi = state.psi[i] + psi_rate * (c * theta - state.psi[i]);
    const T direction = g[i] / (std::sqrt(v_hat) + eps);
    state.theta[i] = theta + theta_rate * (c * theta - psi) - rms_rate * direction;
    state.psi[i] = psi;
    state.v[i] = v;
  }
  state.k = k;
  detail::require_finite(k, "innaprop_step", state.theta, state.psi, state.v);
  return state;
}

/// Constant-step INNAprop without weight decay, clipping or bias correction.
/// Those fields of `config` are ignored.
template <std::floating_point T>
InnapropState<T> innaprop_plain_step(InnapropState<T> state, ParamVector<T> g, double gamma,
                                     const InnapropConfig& config) {
  InnapropConfig plain = config;
  plain.weight_decay = 0.0;
  plain.bias_correction = false;
  plain.grad_clip.reset();
  return innaprop_step(std::move(state), std::move(g), gamma, plain);
}

}  // namespace innaprop
