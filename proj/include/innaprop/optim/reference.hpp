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

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "innaprop/numerics.hpp"
#include "innaprop/optim/common.hpp"

namespace innaprop {

enum class ReferenceKind { SGD, Momentum, Nesterov, RMSpropMomentum, Adam, AdamW, NAdam, INNA };

inline std::string_view to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::SGD: return "sgd";
    case ReferenceKind::Momentum: return "momentum";
    case ReferenceKind::Nesterov: return "nesterov";
    case ReferenceKind::RMSpropMomentum: return "rmsprop_momentum";
    case ReferenceKind::Adam: return "adam";
    case ReferenceKind::AdamW: return "adamw";
    case ReferenceKind::NAdam: return "nadam";
    case ReferenceKind::INNA: return "inna";
  }
  return "?";
}

/// Hyperparameters of the reference methods. Each kind reads only its own fields.
/// weight_decay is decoupled for AdamW and an L2 term (g + lambda theta) elsewhere.
struct ReferenceParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  bool bias_correction = true;
  double alpha = 0.5;  // INNA
  double beta = 0.1;   // INNA

  friend bool operator==(const ReferenceParams&, const ReferenceParams&) = default;
};

/// Slots: SGD none; Momentum/Nesterov m; RMSpropMomentum/Adam/AdamW/NAdam m and v; INNA psi.
template <std::floating_point T>
struct ReferenceState {
  ReferenceKind kind = ReferenceKind::SGD;
  ParamVector<T> theta;
  std::optional<ParamVector<T>> m;
  std::optional<ParamVector<T>> v;
  std::optional<ParamVector<T>> psi;
  std::int64_t k = 0;
};

template <std::floating_point T>
ReferenceState<T> reference_init(ReferenceKind kind, const ParamVector<T>& theta0,
                                 const ReferenceParams& params = {}) {
  const std::size_t p = theta0.size();
  ReferenceState<T> s{kind, theta0, std::nullopt, std::nullopt, std::nullopt, 0};
  switch (kind) {
    case ReferenceKind::SGD:
      break;
    case ReferenceKind::Momentum:
    case ReferenceKind::Nesterov:
      s.m.emplace(p);
      break;
    case ReferenceKind::RMSpropMomentum:
    case ReferenceKind::Adam:
    case ReferenceKind::AdamW:
    case ReferenceKind::NAdam:
      s.m.emplace(p);
      s.v.emplace(p);
      break;
    case ReferenceKind::INNA: {
      s.psi.emplace(p);
      const T c = static_cast<T>(1.0 - params.alpha * params.beta);
      for (std::size_t i = 0; i < p; ++i) (*s.psi)[i] = c * theta0[i];
      break;
    }
  }
  return s;
}

namespace detail {

template <std::floating_point T>
void require_kind(const ReferenceState<T>& s, ReferenceKind kind, const char* op) {
  if (s.kind != kind) {
    throw ContractViolation(std::string(op) + ": state holds " + std::string(to_string(s.kind)));
  }
}

template <std::floating_point T>
void require_slots(const ReferenceState<T>& s, bool m, bool v, bool psi, const char* op) {
  const std::size_t p = s.theta.size();
  auto ok = [p](const std::optional<ParamVector<T>>& slot, bool wanted) {
    return wanted ? (slot.has_value() && slot->size() == p) : !slot.has_value();
  };
  if (!ok(s.m, m) || !ok(s.v, v) || !ok(s.psi, psi)) {
    throw ContractViolation(std::string(op) + ": slot set does not match the optimizer kind");
  }
}

/// g + lambda theta, or g itself when lambda is 0.
template <std::floating_point T>
ParamVector<T> coupled_decay(const ParamVector<T>& g, const ParamVector<T>& theta, double lambda) {
  if (lambda == 0.0) return g;
  ParamVector<T> out(g.size());
  const T l = static_cast<T>(lambda);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] + l * theta[i];
  return out;
}

template <std::floating_point T>
void finish(ReferenceState<T>& s, const char* op) {
  s.k += 1;
  detail::require_finite(s.k, op, s.theta);
  if (s.m) detail::require_finite(s.k, op, *s.m);
  if (s.v) detail::require_finite(s.k, op, *s.v);
  if (s.psi) detail::require_finite(s.k, op, *s.psi);
}

enum class AdamVariant { plain, decoupled, nesterov };

/// Shared Adam-family body: decay (AdamW), moments, bias correction, theta update.
/// The NAdam numerator is beta1 m_hat_{k+1} + (1 - beta1) g / (1 - beta1^k).
template <std::floating_point T>
void adam_family_update(ReferenceState<T>& s, const ParamVector<T>& g_in, double gamma,
                        const ReferenceParams& p, AdamVariant variant) {
  const std::int64_t k = s.k + 1;
  const ParamVector<T> g =
      variant == AdamVariant::decoupled ? g_in : coupled_decay(g_in, s.theta, p.weight_decay);
  const T decay = static_cast<T>(1.0 - p.weight_decay * gamma);
  const T b1 = static_cast<T>(p.beta1);
  const T b2 = static_cast<T>(p.beta2);
  const T one_minus_b1 = static_cast<T>(1.0 - p.beta1);
  const T one_minus_b2 = static_cast<T>(1.0 - p.beta2);
  const T c1 = p.bias_correction ? static_cast<T>(bias_corrector(p.beta1, k)) : T(1);
  const T c1_next = p.bias_correction ? static_cast<T>(bias_corrector(p.beta1, k + 1)) : T(1);
  const T c2 = p.bias_correction ? static_cast<T>(bias_corrector(p.beta2, k)) : T(1);
  const T eps = static_cast<T>(p.epsilon);
  const T lr = static_cast<T>(gamma);
  auto& m = *s.m;
  auto& v = *s.v;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (variant == AdamVariant::decoupled) s.theta[i] = decay * s.theta[i];
    m[i] = b1 * m[i] + one_minus_b1 * g[i];
    v[i] = b2 * v[i] + one_minus_b2 * g[i] * g[i];
    const T v_hat = v[i] / c2;
    const T m_hat = variant == AdamVariant::nesterov
                        ? b1 * m[i] / c1_next + one_minus_b1 * g[i] / c1
                        : m[i] / c1;
    s.theta[i] = s.theta[i] - lr * (m_hat / (std::sqrt(v_hat) + eps));
  }
}

template <std::floating_point T>
void require_adam_params(const ReferenceParams& p, const char* op) {
  if (!(p.beta1 >= 0.0 && p.beta1 < 1.0) || !(p.beta2 >= 0.0 && p.beta2 <= 1.0)) {
    throw ContractViolation(std::string(op) + ": beta1 must lie in [0, 1) and beta2 in [0, 1]");
  }
  if (p.bias_correction && p.beta2 == 1.0) {
    throw ContractViolation(std::string(op) + ": beta2 = 1 makes the bias corrector vanish");
  }
  if (!(p.epsilon >= 0.0) || !(p.weight_decay >= 0.0)) {
    throw ContractViolation(std::string(op) + ": epsilon and weight decay must be >= 0");
  }
}

}  // namespace detail

template <std::floating_point T>
ReferenceState<T> sgd_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma,
                           const ReferenceParams& p = {}) {
  detail::require_kind(s, ReferenceKind::SGD, "sgd_step");
  detail::require_slots(s, false, false, false, "sgd_step");
  detail::require_step_size(gamma, "sgd_step");
  detail::require_dims<T>(s.theta.size(), "sgd_step", g);
  const ParamVector<T> d = detail::coupled_decay(g, s.theta, p.weight_decay);
  const T lr = static_cast<T>(gamma);
  for (std::size_t i = 0; i < d.size(); ++i) s.theta[i] -= lr * d[i];
  detail::finish(s, "sgd_step");
  return s;
}

/// Heavy ball: m <- beta1 m + g, theta <- theta - gamma m.
template <std::floating_point T>
ReferenceState<T> momentum_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma,
                                const ReferenceParams& p = {}) {
  detail::require_kind(s, ReferenceKind::Momentum, "momentum_step");
  detail::require_slots(s, true, false, false, "momentum_step");
  detail::require_step_size(gamma, "momentum_step");
  detail::require_dims<T>(s.theta.size(), "momentum_step", g);
  const ParamVector<T> d = detail::coupled_decay(g, s.theta, p.weight_decay);
  const T b1 = static_cast<T>(p.beta1);
  const T lr = static_cast<T>(gamma);
  auto& m = *s.m;
  for (std::size_t i = 0; i < d.size(); ++i) {
    m[i] = b1 * m[i] + d[i];
    s.theta[i] -= lr * m[i];
  }
  detail::finish(s, "momentum_step");
  return s;
}

/// m <- beta1 m + g, theta <- theta - gamma (g + beta1 m).
template <std::floating_point T>
ReferenceState<T> nesterov_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma,
                                const ReferenceParams& p = {}) {
  detail::require_kind(s, ReferenceKind::Nesterov, "nesterov_step");
  detail::require_slots(s, true, false, false, "nesterov_step");
  detail::require_step_size(gamma, "nesterov_step");
  detail::require_dims<T>(s.theta.size(), "nesterov_step", g);
  const ParamVector<T> d = detail::coupled_decay(g, s.theta, p.weight_decay);
  const T b1 = static_cast<T>(p.beta1);
  const T lr = static_cast<T>(gamma);
  auto& m = *s.m;
  for (std::size_t i = 0; i < d.size(); ++i) {
    m[i] = b1 * m[i] + d[i];
    s.theta[i] -= lr * (d[i] + b1 * m[i]);
  }
  detail::finish(s, "nesterov_step");
  return s;
}

/// v <- beta2 v + (1 - beta2) g^2, m <- beta1 m + g / (sqrt(v) + eps), theta <- theta - gamma m.
template <std::floating_point T>
ReferenceState<T> rmsprop_momentum_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma,
                                        const ReferenceParams& p = {}) {
  detail::require_kind(s, ReferenceKind::RMSpropMomentum, "rmsprop_momentum_step");
  detail::require_slots(s, true, true, false, "rmsprop_momentum_step");
  detail::require_step_size(gamma, "rmsprop_momentum_step");
  detail::require_dims<T>(s.theta.size(), "rmsprop_momentum_step", g);
  const ParamVector<T> d = detail::coupled_decay(g, s.theta, p.weight_decay);
  const T b1 = static_cast<T>(p.beta1);
  const T b2 = static_cast<T>(p.beta2);
  const T one_minus_b2 = static_cast<T>(1.0 - p.beta2);
  const T eps = static_cast<T>(p.epsilon);
  const T lr = static_cast<T>(gamma);
  auto& m = *s.m;
  auto& v = *s.v;
  for (std::size_t i = 0; i < d.size(); ++i) {
    v[i] = b2 * v[i] + one_minus_b2 * d[i] * d[i];
    m[i] = b1 * m[i] + d[i] / (std::sqrt(v[i]) + eps);
    s.theta[i] -= lr * m[i];
  }
  detail::finish(s, "rmsprop_momentum_step");
  return s;
}

template <std::floating_point T>
ReferenceState<T> adam_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma,
                            const ReferenceParams& p = {}) {
  detail::require_kind(s, ReferenceKind::Adam, "adam_step");
  detail::require_slots(s, true, true, false, "adam_step");
  detail::require_adam_params<T>(p, "adam_step");
  detail::require_step_size(gamma, "adam_step");
  detail::require_dims<T>(s.theta.size(), "adam_step", g);
  detail::adam_family_update(s, g, gamma, p, detail::AdamVariant::plain);
  detail::finish(s, "adam_step");
  return s;
}

/// AdamW: theta <- (1 - lambda gamma) theta, then the bias-corrected Adam update.
template <std::floating_point T>
ReferenceState<T> adamw_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma, double beta1,
                             double beta2, double epsilon, double lambda) {
  ReferenceParams p;
  p.beta1 = beta1;
  p.beta2 = beta2;
  p.epsilon = epsilon;
  p.weight_decay = lambda;
  detail::require_kind(s, ReferenceKind::AdamW, "adamw_step");
  detail::require_slots(s, true, true, false, "adamw_step");
  detail::require_adam_params<T>(p, "adamw_step");
  detail::require_step_size(gamma, "adamw_step");
  detail::require_dims<T>(s.theta.size(), "adamw_step", g);
  detail::adam_family_update(s, g, gamma, p, detail::AdamVariant::decoupled);
  detail::finish(s, "adamw_step");
  return s;
}

template <std::floating_point T>
ReferenceState<T> nadam_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma,
                             const ReferenceParams& p = {}) {
  detail::require_kind(s, ReferenceKind::NAdam, "nadam_step");
  detail::require_slots(s, true, true, false, "nadam_step");
  detail::require_adam_params<T>(p, "nadam_step");
  detail::require_step_size(gamma, "nadam_step");
  detail::require_dims<T>(s.theta.size(), "nadam_step", g);
  detail::adam_family_update(s, g, gamma, p, detail::AdamVariant::nesterov);
  detail::finish(s, "nadam_step");
  return s;
}

/// INNA in its psi_k form:
///   psi_{k+1}   = psi_k + gamma ((1/beta - alpha) theta_k - psi_k / beta)
///   theta_{k+1} = theta_k + gamma ((1/beta - alpha) theta_k - psi_k / beta - beta g_k)
/// with (1/beta - alpha) theta - psi/beta evaluated as ((1 - alpha beta) theta - psi) / beta.
template <std::floating_point T>
ReferenceState<T> inna_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma, double alpha,
                            double beta) {
  detail::require_kind(s, ReferenceKind::INNA, "inna_step");
  detail::require_slots(s, false, false, true, "inna_step");
  detail::require_step_size(gamma, "inna_step");
  if (!(beta > 0.0)) throw ContractViolation("inna_step: beta must be positive");
  detail::require_dims<T>(s.theta.size(), "inna_step", g);
  const T c = static_cast<T>(1.0 - alpha * beta);
  const T inv_beta = static_cast<T>(1.0 / beta);
  const T lr = static_cast<T>(gamma);
  const T b = static_cast<T>(beta);
  auto& psi = *s.psi;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const T drift = (c * s.theta[i] - psi[i]) * inv_beta;
    psi[i] = psi[i] + lr * drift;
    s.theta[i] = s.theta[i] + lr * (drift - b * g[i]);
  }
  detail::finish(s, "inna_step");
  return s;
}

/// INNA rewritten to use psi_{k+1} in the theta update, so psi_k need not be kept:
///   psi_{k+1}   = (1 - gamma/beta) psi_k + gamma (1/beta - alpha) theta_k
///   theta_{k+1} = (1 + gamma (1 - alpha beta)/(beta - gamma)) theta_k
///                 - gamma/(beta - gamma) psi_{k+1} - gamma beta g_k
/// Requires gamma < beta.
template <std::floating_point T>
ReferenceState<T> inna_reduced_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma,
                                    double alpha, double beta) {
  detail::require_kind(s, ReferenceKind::INNA, "inna_reduced_step");
  detail::require_slots(s, false, false, true, "inna_reduced_step");
  detail::require_step_size(gamma, "inna_reduced_step");
  if (!(gamma < beta)) throw WellPosednessError("inna_reduced_step: step size must stay below beta");
  detail::require_dims<T>(s.theta.size(), "inna_reduced_step", g);
  const T c = static_cast<T>(1.0 - alpha * beta);
  const T psi_rate = static_cast<T>(gamma / beta);
  const T theta_rate = static_cast<T>(gamma / (beta - gamma));
  const T grad_rate = static_cast<T>(gamma * beta);
  auto& psi = *s.psi;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const T theta = s.theta[i];
    psi[i] = psi[i] + psi_rate * (c * theta - psi[i]);
    s.theta[i] = theta + theta_rate * (c * theta - psi[i]) - grad_rate * g[i];
  }
  detail::finish(s, "inna_reduced_step");
  return s;
}

/// One update of whichever method `s.kind` names.
template <std::floating_point T>
ReferenceState<T> reference_step(ReferenceState<T> s, const ParamVector<T>& g, double gamma,
                                 const ReferenceParams& p) {
  switch (s.kind) {
    case ReferenceKind::SGD: return sgd_step(std::move(s), g, gamma, p);
    case ReferenceKind::Momentum: return momentum_step(std::move(s), g, gamma, p);
    case ReferenceKind::Nesterov: return nesterov_step(std::move(s), g, gamma, p);
    case ReferenceKind::RMSpropMomentum: return rmsprop_momentum_step(std::move(s), g, gamma, p);
    case ReferenceKind::Adam: return adam_step(std::move(s), g, gamma, p);
    case ReferenceKind::AdamW:
      return adamw_step(std::move(s), g, gamma, p.beta1, p.beta2, p.epsilon, p.weight_decay);
    case ReferenceKind::NAdam: return nadam_step(std::move(s), g, gamma, p);
    case ReferenceKind::INNA: return inna_step(std::move(s), g, gamma, p.alpha, p.beta);
  }
  throw ContractViolation("reference_step: unknown kind");
}

}  // namespace innaprop
