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

// INNAprop variant built the way RMSprop-with-momentum is built from heavy ball.
// With R_k = g_k / (sqrt(v_{k+1}) + eps), a = 1 - alpha gamma, b = beta gamma,
// c = gamma (beta - gamma):
//
//   direct:   m_{k+1} = a m_k + b R_k - c R_{k-1},          theta_{k+1} = theta_k - m_{k+1}
//   reduced:  mt_{k+1} = a mt_k + (b - c/a) R_k,            theta_{k+1} = theta_k - mt_{k+1} - (c/a) R_k
//
// related by mt_k = m_k - (c/a) R_{k-1}. Both start from m_0 = mt_0 = 0, R_{-1} = 0.
// Step size must stay constant along a trajectory for the two forms to agree.

#include <cmath>
#include <concepts>
#include <cstdint>

#include "innaprop/numerics.hpp"
#include "innaprop/optim/common.hpp"
#include "innaprop/optim/innaprop.hpp"

namespace innaprop {

enum class MomentumForm { direct, reduced };

template <std::floating_point T>
struct MomentumVariantState {
  ParamVector<T> theta;
  ParamVector<T> m_or_mtilde;
  ParamVector<T> v;
  /// R_{k-1}; only read by the direct form.
  ParamVector<T> rms_prev;
  MomentumForm form = MomentumForm::reduced;
  std::int64_t k = 0;
};

template <std::floating_point T>
MomentumVariantState<T> innaprop_momentum_init(const ParamVector<T>& theta0, MomentumForm form) {
  const std::size_t p = theta0.size();
  return {theta0, ParamVector<T>(p), ParamVector<T>(p), ParamVector<T>(p), form, 0};
}

/// Uses alpha, beta, sigma and epsilon from `config`; no bias correction or decay.
template <std::floating_point T>
MomentumVariantState<T> innaprop_momentum_step(MomentumVariantState<T> state, const ParamVector<T>& g,
                                               double gamma, const InnapropConfig& config) {
  validate(config);
  detail::require_step_size(gamma, "innaprop_momentum_step");
  const double a = 1.0 - config.alpha * gamma;
  if (a == 0.0) throw DomainError("innaprop_momentum_step: alpha * gamma = 1 makes the recursion singular");
  const std::size_t p = state.theta.size();
  detail::require_dims<T>(p, "innaprop_momentum_step", state.m_or_mtilde, state.v, state.rms_prev, g);
  const std::int64_t k = state.k + 1;

  const double b = config.beta * gamma;
  const double c = gamma * (config.beta - gamma);
  const T decay = static_cast<T>(a);
  const T sigma = static_cast<T>(config.sigma);
  const T one_minus_sigma = static_cast<T>(1.0 - config.sigma);
  const T eps = static_cast<T>(config.epsilon);

  if (state.form == MomentumForm::direct) {
    const T new_weight = static_cast<T>(b);
    const T old_weight = static_cast<T>(c);
    for (std::size_t i = 0; i < p; ++i) {
      state.v[i] = sigma * state.v[i] + one_minus_sigma * g[i] * g[i];
      const T r = g[i] / (std::sqrt(state.v[i]) + eps);
      state.m_or_mtilde[i] = decay * state.m_or_mtilde[i] + new_weight * r - old_weight * state.rms_prev[i];
      state.theta[i] -= state.m_or_mtilde[i];
      state.rms_prev[i] = r;
    }
  } else {
    // b - c/a = gamma^2 (1 - alpha beta) / (1 - alpha gamma)
    const T increment = static_cast<T>(gamma * gamma * ((1.0 - config.alpha * config.beta) / a));
    const T correction = static_cast<T>(c / a);
    for (std::size_t i = 0; i < p; ++i) {
      state.v[i] = sigma * state.v[i] + one_minus_sigma * g[i] * g[i];
      const T r = g[i] / (std::sqrt(state.v[i]) + eps);
      state.m_or_mtilde[i] = decay * state.m_or_mtilde[i] + increment * r;
      state.theta[i] = state.theta[i] - state.m_or_mtilde[i] - correction * r;
    }
  }
  state.k = k;
  detail::require_finite(k, "innaprop_momentum_step", state.theta, state.m_or_mtilde, state.v);
  return state;
}

}  // namespace innaprop
