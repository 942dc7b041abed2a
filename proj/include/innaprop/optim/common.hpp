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
#include <string>

#include "innaprop/errors.hpp"
#include "innaprop/numerics.hpp"

namespace innaprop::detail {

template <std::floating_point T, class... Vs>
void require_dims(std::size_t dim, const char* op, const Vs&... vs) {
  const bool ok = ((vs.size() == dim) && ...);
  if (!ok) throw ContractViolation(std::string(op) + ": dimension mismatch");
}

/// Throws DivergenceError when any coordinate of the given vectors is NaN or Inf.
template <class... Vs>
void require_finite(std::int64_t step, const char* op, const Vs&... vs) {
  const bool ok = (vs.all_finite() && ...);
  if (!ok) throw DivergenceError(step, std::string(op) + ": non-finite state");
}

inline void require_step_size(double gamma, const char* op) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ContractViolation(std::string(op) + ": step size must be finite and >= 0");
  }
}

/// Bias corrector 1 - rate^k for the k-th update (k >= 1).
inline double bias_corrector(double rate, std::int64_t k) {
  return 1.0 - std::pow(rate, static_cast<double>(k));
}

}  // namespace innaprop::detail
