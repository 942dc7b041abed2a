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
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "innaprop/errors.hpp"

namespace innaprop {

enum class ScheduleKind { constant, cosine, cosine_warmup, linear_warmup };

inline std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::cosine: return "cosine";
    case ScheduleKind::cosine_warmup: return "cosine_warmup";
    case ScheduleKind::linear_warmup: return "linear_warmup";
  }
  return "?";
}

inline std::optional<ScheduleKind> schedule_kind_from_string(std::string_view name) {
  for (auto kind : {ScheduleKind::constant, ScheduleKind::cosine, ScheduleKind::cosine_warmup,
                    ScheduleKind::linear_warmup}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

/// Declarative learning-rate schedule over step indices k in [0, t_max].
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::constant;
  double gamma0 = 1e-3;
  double gamma_min = 0.0;
  std::int64_t t_max = 1;
  std::int64_t t_warmup = 0;
  /// cosine_warmup only: last index of the cosine branch.
  std::int64_t t_decay = 1;

  friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

inline void validate(const ScheduleSpec& s) {
  auto fail = [](const std::string& what) { throw ContractViolation("schedule: " + what); };
  if (!(s.gamma0 > 0.0) || !std::isfinite(s.gamma0)) fail("gamma0 must be positive and finite");
  if (!(s.gamma_min >= 0.0)) fail("gamma_min must be >= 0");
  if (s.gamma_min > s.gamma0) fail("gamma_min must not exceed gamma0");
  if (s.t_max <= 0) fail("t_max must be positive");
  if (s.t_warmup < 0) fail("t_warmup must be >= 0");
  const bool warmup = s.kind == ScheduleKind::cosine_warmup || s.kind == ScheduleKind::linear_warmup;
  if (warmup && s.t_warmup >= s.t_max) fail("t_warmup must be below t_max");
  if (s.kind == ScheduleKind::cosine_warmup && s.t_decay < s.t_warmup) {
    fail("t_decay must be >= t_warmup");
  }
}

namespace detail {

/// gamma0 * k / t, rounded once from extended precision so consecutive warmup
/// values differ by gamma0 / t to within one ulp.
inline double linear_ramp(double gamma0, std::int64_t k, std::int64_t t) {
  return static_cast<double>(static_cast<long double>(gamma0) * static_cast<long double>(k) /
                             static_cast<long double>(t));
}

inline double cosine_between(double gamma0, double gamma_min, std::int64_t num, std::int64_t den) {
  const double phase = std::numbers::pi * static_cast<double>(num) / static_cast<double>(den);
  return gamma_min + 0.5 * (gamma0 - gamma_min) * (1.0 + std::cos(phase));
}

}  // namespace detail

/// Learning rate at step index k. Pure; throws ContractViolation outside [0, t_max].
inline double lr_at(const ScheduleSpec& s, std::int64_t k) {
  validate(s);
  if (k < 0 || k > s.t_max) {
    throw ContractViolation("schedule: step index " + std::to_string(k) + " outside [0, " +
                            std::to_string(s.t_max) + "]");
  }
  switch (s.kind) {
    case ScheduleKind::constant:
      return s.gamma0;
    case ScheduleKind::cosine:
      return detail::cosine_between(s.gamma0, s.gamma_min, k, s.t_max);
    case ScheduleKind::cosine_warmup:
      if (k < s.t_warmup) return detail::linear_ramp(s.gamma0, k, s.t_warmup);
      if (k <= s.t_decay) {
        if (s.t_decay == s.t_warmup) return s.gamma0;
        return detail::cosine_between(s.gamma0, s.gamma_min, k - s.t_warmup, s.t_decay - s.t_warmup);
      }
      return s.gamma_min;
    case ScheduleKind::linear_warmup:
      if (k < s.t_warmup) return detail::linear_ramp(s.gamma0, k, s.t_warmup);
      return s.gamma0 * (1.0 - static_cast<double>(k - s.t_warmup) /
                                   static_cast<double>(s.t_max - s.t_warmup));
  }
  throw ContractViolation("schedule: unknown kind");
}

/// Largest value the schedule emits on [0, t_max].
inline double sup_lr(const ScheduleSpec& s) {
  double sup = 0.0;
  for (std::int64_t k = 0; k <= s.t_max; ++k) sup = std::max(sup, lr_at(s, k));
  return sup;
}

/// True when every emitted learning rate is strictly below `bound`
/// (the beta > sup gamma_k guard of INNAprop-family runs).
inline bool strictly_below(const ScheduleSpec& s, double bound) {
  for (std::int64_t k = 0; k <= s.t_max; ++k) {
    if (!(lr_at(s, k) < bound)) return false;
  }
  return true;
}

}  // namespace innaprop
