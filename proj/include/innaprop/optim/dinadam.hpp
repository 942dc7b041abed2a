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

// DINAdam: the Adam construction (momentum + last-step RMS scaling) applied to the
// dynamical inertial Newton discretization instead of heavy ball.
//
//   v_{k+1}  = sigma2 v_k + (1 - sigma2) g_k^2
//   mt_{k+1} = sigma1 mt_k + (1 - sigma1 + beta alpha sigma1 - beta alpha) g_k
//   theta    -= eta (mt_{k+1} + alpha beta g_k) / (sqrt(v_{k+1}) + eps)
//
// mt_k = m_k - alpha beta g_{k-1} where m follows
//   m_{k+1} = sigma1 m_k + (1 - sigma1) g_k + beta alpha sigma1 (g_k - g_{k-1}),
// so the theta update carries +alpha beta g_k. dinadam_direct_step runs the m form
// with its extra g_{k-1} slot and must agree with dinadam_step.

#include <cmath>
#include <concepts>
#include <cstdint>

#include "innaprop/numerics.hpp"
#include "innaprop/optim/common.hpp"

namespace innaprop {

template <std::floating_point T>
struct DinadamState {
  ParamVector<T> theta;
  ParamVector<T> mtilde;
  ParamVector<T> v;
  double sigma1 = 0.9;
  double sigma2 = 0.999;
  std::int64_t k = 0;
};

template <std::floating_point T>
struct DinadamDirectState {
  ParamVector<T> theta;
  ParamVector<T> m;
  ParamVector<T> g_prev;
  ParamVector<T> v;
  double sigma1 = 0.9;
  double sigma2 = 0.999;
  std::int64_t k = 0;
};

namespace detail {
inline void require_dinadam_params(double sigma1, double sigma2, double eta, double epsilon) {
  if (!(sigma1 >= 0.0 && sigma1 <= 1.0) || !(sigma2 >= 0.0 && sigma2 <= 1.0)) {
    throw ContractViolation("dinadam: sigma1 and sigma2 must lie in [0, 1]");
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ContractViolation("dinadam: eta must be positive");
  if (!(epsilon >= 0.0)) throw ContractViolation("dinadam: epsilon must be >= 0");
}
}  // namespace detail

template <std::floating_point T>
DinadamState<T> dinadam_init(const ParamVector<T>& theta0, double sigma1, double sigma2) {
  const std::size_t p = theta0.size();
  return {theta0, ParamVector<T>(p), ParamVector<T>(p), sigma1, sigma2, 0};
}

template <std::floating_point T>
DinadamDirectState<T> dinadam_direct_init(const ParamVector<T>& theta0, double sigma1, double sigma2) {
  const std::size_t p = theta0.size();
  return {theta0, ParamVector<T>(p), ParamVector<T>(p), ParamVector<T>(p), sigma1, sigma2, 0};
}

template <std::floating_point T>
DinadamState<T> dinadam_step(DinadamState<T> state, const ParamVector<T>& g, double eta, double alpha,
                             double beta, double epsilon = 1e-8) {
  detail::require_dinadam_params(state.sigma1, state.sigma2, eta, epsilon);
  const std::size_t p = state.theta.size();
  detail::require_dims<T>(p, "dinadam_step", state.mtilde, state.v, g);
  const std::int64_t k = state.k + 1;

  const double ab = alpha * beta;
  const T s1 = static_cast<T>(state.sigma1);
  const T s2 = static_cast<T>(state.sigma2);
  const T one_minus_s2 = static_cast<T>(1.0 - state.sigma2);
  const T gain = static_cast<T>(1.0 - state.sigma1 + ab * state.sigma1 - ab);
  const T lookahead = static_cast<T>(ab);
  const T step = static_cast<T>(eta);
  const T eps = static_cast<T>(epsilon);
  for (std::size_t i = 0; i < p; ++i) {
    state.v[i] = s2 * state.v[i] + one_minus_s2 * g[i] * g[i];
    state.mtilde[i] = s1 * state.mtilde[i] + gain * g[i];
    state.theta[i] -= step * ((state.mtilde[i] + lookahead * g[i]) / (std::sqrt(state.v[i]) + eps));
  }
  state.k = k;
  detail::require_finite(k, "dinadam_step", state.theta, state.mtilde, state.v);
  return state;
}

template <std::floating_point T>
DinadamDirectState<T> dinadam_direct_step(DinadamDirectState<T> state, const ParamVector<T>& g,
                                          double eta, double alpha, double beta, double epsilon = 1e-8) {
  detail::require_dinadam_params(state.sigma1, state.sigma2, eta, epsilon);
  const std::size_t p = state.theta.size();
  detail::require_dims<T>(p, "dinadam_direct_step", state.m, state.g_prev, state.v, g);
  const std::int64_t k = state.k + 1;

  const T s1 = static_cast<T>(state.sigma1);
  const T one_minus_s1 = static_cast<T>(1.0 - state.sigma1);
  const T s2 = static_cast<T>(state.sigma2);
  const T one_minus_s2 = static_cast<T>(1.0 - state.sigma2);
  const T damping = static_cast<T>(beta * alpha * state.sigma1);
  const T step = static_cast<T>(eta);
  const T eps = static_cast<T>(epsilon);
  for (std::size_t i = 0; i < p; ++i) {
    state.v[i] = s2 * state.v[i] + one_minus_s2 * g[i] * g[i];
    state.m[i] = s1 * state.m[i] + one_minus_s1 * g[i] + damping * (g[i] - state.g_prev[i]);
    state.theta[i] -= step * (state.m[i] / (std::sqrt(state.v[i]) + eps));
    state.g_prev[i] = g[i];
  }
  state.k = k;
  detail::require_finite(k, "dinadam_direct_step", state.theta, state.m, state.v);
  return state;
}

}  // namespace innaprop
