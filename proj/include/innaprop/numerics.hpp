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
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "innaprop/errors.hpp"

namespace innaprop {

enum class Precision { F32, F64 };

template <std::floating_point T>
constexpr Precision precision_of() {
  return std::same_as<T, float> ? Precision::F32 : Precision::F64;
}

/// Dense parameter vector. All optimizer algebra is coordinatewise over it.
template <std::floating_point T>
class ParamVector {
 public:
  using value_type = T;

  ParamVector() = default;
  explicit ParamVector(std::size_t dim, T fill = T(0)) : data_(dim, fill) {}
  ParamVector(std::initializer_list<T> values) : data_(values) {}
  explicit ParamVector(std::vector<T> values) : data_(std::move(values)) {}

  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
  [[nodiscard]] static constexpr Precision precision() noexcept { return precision_of<T>(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  [[nodiscard]] std::span<T> span() noexcept { return data_; }
  [[nodiscard]] std::span<const T> span() const noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  template <std::floating_point U>
  [[nodiscard]] ParamVector<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(), [](T x) { return static_cast<U>(x); });
    return ParamVector<U>(std::move(out));
  }

  [[nodiscard]] bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](T x) { return std::isfinite(x); });
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<T> data_;
};

using Vec64 = ParamVector<double>;
using Vec32 = ParamVector<float>;

namespace detail {

template <std::floating_point T>
void require_same_dim(const ParamVector<T>& a, const ParamVector<T>& b, const char* op) {
  if (a.size() != b.size()) {
    throw ContractViolation(std::string(op) + ": dimension mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
  }
}

template <std::floating_point T>
ParamVector<T> checked(ParamVector<T> out, const char* op) {
  if (!out.all_finite()) throw DomainError(std::string(op) + ": non-finite result");
  return out;
}

}  // namespace detail

enum class CwOp { add, sub, mul, div, sqrt, scale, add_scalar };

template <std::floating_point T>
ParamVector<T> coordinatewise(CwOp op, const ParamVector<T>& a, const ParamVector<T>& b) {
  ParamVector<T> out(a.size());
  switch (op) {
    case CwOp::add:
      detail::require_same_dim(a, b, "add");
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
      return detail::checked(std::move(out), "add");
    case CwOp::sub:
      detail::require_same_dim(a, b, "sub");
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
      return detail::checked(std::move(out), "sub");
    case CwOp::mul:
      detail::require_same_dim(a, b, "mul");
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
      return detail::checked(std::move(out), "mul");
    case CwOp::div:
      detail::require_same_dim(a, b, "div");
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (b[i] == T(0)) throw DomainError("div: zero divisor at index " + std::to_string(i));
        out[i] = a[i] / b[i];
      }
      return detail::checked(std::move(out), "div");
    case CwOp::sqrt:
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < T(0)) throw DomainError("sqrt: negative element at index " + std::to_string(i));
        out[i] = std::sqrt(a[i]);
      }
      return detail::checked(std::move(out), "sqrt");
    case CwOp::scale:
    case CwOp::add_scalar:
      break;
  }
  throw ContractViolation("coordinatewise: scalar operation given a vector operand");
}

template <std::floating_point T>
ParamVector<T> coordinatewise(CwOp op, const ParamVector<T>& a, T s) {
  ParamVector<T> out(a.size());
  switch (op) {
    case CwOp::scale:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
      return detail::checked(std::move(out), "scale");
    case CwOp::add_scalar:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s;
      return detail::checked(std::move(out), "add_scalar");
    case CwOp::sqrt:
      return coordinatewise(op, a, a);
    default:
      break;
  }
  throw ContractViolation("coordinatewise: vector operation given a scalar operand");
}

template <std::floating_point T>
ParamVector<T> add(const ParamVector<T>& a, const ParamVector<T>& b) { return coordinatewise(CwOp::add, a, b); }
template <std::floating_point T>
ParamVector<T> sub(const ParamVector<T>& a, const ParamVector<T>& b) { return coordinatewise(CwOp::sub, a, b); }
template <std::floating_point T>
ParamVector<T> mul(const ParamVector<T>& a, const ParamVector<T>& b) { return coordinatewise(CwOp::mul, a, b); }
template <std::floating_point T>
ParamVector<T> div(const ParamVector<T>& a, const ParamVector<T>& b) { return coordinatewise(CwOp::div, a, b); }
template <std::floating_point T>
ParamVector<T> sqrt(const ParamVector<T>& a) { return coordinatewise(CwOp::sqrt, a, a); }
template <std::floating_point T>
ParamVector<T> scale(const ParamVector<T>& a, T s) { return coordinatewise(CwOp::scale, a, s); }
template <std::floating_point T>
ParamVector<T> add_scalar(const ParamVector<T>& a, T s) { return coordinatewise(CwOp::add_scalar, a, s); }

/// Euclidean norm, accumulated in double regardless of T.
template <std::floating_point T>
double l2_norm(std::span<const T> v) {
  double acc = 0.0;
  for (T x : v) acc += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(acc);
}

template <std::floating_point T>
double l2_norm(const ParamVector<T>& v) { return l2_norm(v.span()); }

template <std::floating_point T>
double max_abs(std::span<const T> v) {
  double m = 0.0;
  for (T x : v) m = std::max(m, std::abs(static_cast<double>(x)));
  return m;
}

/// ||a - b||_inf / max(||a||_inf, ||b||_inf). Two zero vectors compare as 0.
template <std::floating_point T>
double max_rel_error(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw ContractViolation("max_rel_error: dimension mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  const double scale = std::max(max_abs(a), max_abs(b));
  if (scale == 0.0) return diff;
  return diff / scale;
}

template <std::floating_point T>
double max_rel_error(const ParamVector<T>& a, const ParamVector<T>& b) {
  return max_rel_error(a.span(), b.span());
}

/// Rescales g onto the ball of radius max_norm when it lies outside.
/// The result's computed norm never exceeds max_norm, so clipping twice is a no-op.
template <std::floating_point T>
ParamVector<T> global_norm_clip(const ParamVector<T>& g, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractViolation("global_norm_clip: max_norm must be positive");
  const double norm = l2_norm(g);
  if (norm <= max_norm) return g;
  double factor = max_norm / norm;
  ParamVector<T> out(g.size());
  for (int attempt = 0; attempt < 8; ++attempt) {
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = static_cast<T>(g[i] * factor);
    if (l2_norm(out) <= max_norm) break;
    factor *= 1.0 - std::numeric_limits<T>::epsilon();
  }
  return out;
}

/// Reproducible random stream keyed by (seed, stream_id).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the standard;
/// the distributions below are written out so draws are identical across
/// standard-library implementations.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x494e4e41u};
    engine_.seed(seq);
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  /// Unbiased integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    if (n == 0) throw ContractViolation("RngStream::index: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = 0;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Fisher-Yates.
  template <class U>
  void shuffle(std::span<U> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Anything with a scalar loss over a double parameter span.
template <class F>
concept ScalarObjective = requires(const F& f, std::span<const double> theta) {
  { f.loss(theta) } -> std::convertible_to<double>;
};

/// Central-difference gradient (J(theta + h e_i) - J(theta - h e_i)) / 2h, in F64.
template <ScalarObjective F>
Vec64 fd_gradient(const F& objective, const Vec64& theta, double h = 1e-5) {
  if (!(h > 0.0)) throw ContractViolation("fd_gradient: step must be positive");
  Vec64 probe = theta;
  Vec64 grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double x = theta[i];
    probe[i] = x + h;
    const double up = objective.loss(probe.span());
    probe[i] = x - h;
    const double down = objective.loss(probe.span());
    probe[i] = x;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw DomainError("fd_gradient: non-finite loss while probing coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace innaprop
