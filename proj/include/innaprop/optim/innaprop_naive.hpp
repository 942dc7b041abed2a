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

// Direct three-term discretization of the RMSprop-driven inertial flow, before
// the change of variables that brings INNAprop down to three slots:
//
//   (theta_{k+1} - 2 theta_k + theta_{k-1}) / gamma^2 + alpha (theta_k - theta_{k-1}) / gamma
//     + beta (R_k - R_{k-1}) / gamma + R_{k-1} = 0,      R_j = g_j / (sqrt(v_{j+1}) + eps)
//
// One step touches six full-dimension buffers: theta_{k-1}, theta_k, g_{k-1}, g_k,
// v_k and v_{k+1}. It is kept as a reference for the reduced form, with the plain
// (no bias correction, no weight decay) semantics of the constant-step algorithm.

#include <cmath>
#include <concepts>
#include <cstdint>

#include "innaprop/numerics.hpp"
#include "innaprop/optim/common.hpp"
#include "innaprop/optim/innaprop.hpp"

namespace innaprop {

template <std::floating_point T>
struct NaiveInnapropState {
  ParamVector<T> theta_prev;  // theta_{k-1}
  ParamVector<T> theta_curr;  // theta_k
  ParamVector<T> g_prev;      // g_{k-1}
  ParamVector<T> v_prev;      // v_{k-1}
  ParamVector<T> v_curr;      // v_k
  std::int64_t k = 0;
};

/// First step from theta0. psi_0 = (1 - alpha beta) theta_0 forces
/// theta_1 = theta_0 - gamma beta g_0 / (sqrt(v_1) + eps); any other theta_1 would
/// start the recursion on a different trajectory than the reduced form.
template <std::floating_point T>
NaiveInnapropState<T> innaprop_naive_bootstrap(const ParamVector<T>& theta0, const ParamVector<T>& g0,
                                               double gamma, const InnapropConfig& config) {
  validate(config);
  detail::require_well_posed(gamma, config.beta, "innaprop_naive_bootstrap");
  const std::size_t p = theta0.size();
  detail::require_dims<T>(p, "innaprop_naive_bootstrap", g0);

  const T sigma = static_cast<T>(config.sigma);
  const T one_minus_sigma = static_cast<T>(1.0 - config.sigma);
  const T eps = static_cast<T>(config.epsilon);
  const T rms_rate = static_cast<T>(gamma * config.beta);

  NaiveInnapropState<T> s{theta0, theta0, g0, ParamVector<T>(p), ParamVector<T>(p), 1};
  for (std::size_t i = 0; i < p; ++i) {
    const T v1 = sigma * T(0) + one_minus_sigma * g0[i] * g0[i];
    s.v_curr[i] = v1;
    s.theta_curr[i] = theta0[i] - rms_rate * (g0[i] / (std::sqrt(v1) + eps));
  }
  detail::require_finite(1, "innaprop_naive_bootstrap", s.theta_curr, s.v_curr);
  return s;
}

/// Solves the three-term recursion for theta_{k+1}. `g_curr` is the gradient at theta_curr.
template <std::floating_point T>
NaiveInnapropState<T> innaprop_naive_step(NaiveInnapropState<T> state, const ParamVector<T>& g_curr,
                                          double gamma, const InnapropConfig& config) {
  validate(config);
  detail::require_well_posed(gamma, config.beta, "innaprop_naive_step");
  const std::size_t p = state.theta_curr.size();
  detail::require_dims<T>(p, "innaprop_naive_step", state.theta_prev, state.g_prev, state.v_prev,
                          state.v_curr, g_curr);
  const std::int64_t k = state.k + 1;

  const T sigma = static_cast<T>(config.sigma);
  const T one_minus_sigma = static_cast<T>(1.0 - config.sigma);
  const T eps = static_cast<T>(config.epsilon);
  const T friction = static_cast<T>(1.0 - gamma * config.alpha);
  const T damping = static_cast<T>(gamma * config.beta);
  const T gravity = static_cast<T>(gamma * gamma);

  ParamVector<T> v_next(p);
  ParamVector<T> theta_next(p);
  for (std::size_t i = 0; i < p; ++i) {
    v_next[i] = sigma * state.v_curr[i] + one_minus_sigma * g_curr[i] * g_curr[i];
    const T r_prev = state.g_prev[i] / (std::sqrt(state.v_curr[i]) + eps);
    const T r_curr = g_curr[i] / (std::sqrt(v_next[i]) + eps);
    const T velocity = state.theta_curr[i] - state.theta_prev[i];
    theta_next[i] = state.theta_curr[i] + friction * velocity - damping * (r_curr - r_prev) -
                    gravity * r_prev;
  }
  detail::require_finite(k, "innaprop_naive_step", theta_next, v_next);

  state.theta_prev = std::move(state.theta_curr);
  state.theta_curr = std::move(theta_next);
  state.g_prev = g_curr;
  state.v_prev = std::move(state.v_curr);
  state.v_curr = std::move(v_next);
  state.k = k;
  return state;
}

}  // namespace innaprop
