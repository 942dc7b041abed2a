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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "innaprop/errors.hpp"
#include "innaprop/numerics.hpp"

namespace innaprop {

/// Row-major features with a train/test split. num_classes is 0 for regression targets.
struct Dataset {
  std::size_t width = 0;
  std::vector<double> train_x;
  std::vector<double> train_y;
  std::vector<double> test_x;
  std::vector<double> test_y;
  int num_classes = 0;

  [[nodiscard]] std::size_t n_train() const noexcept { return train_y.size(); }
  [[nodiscard]] std::size_t n_test() const noexcept { return test_y.size(); }
  [[nodiscard]] std::span<const double> train_row(std::size_t i) const {
    return std::span<const double>(train_x).subspan(i * width, width);
  }
  [[nodiscard]] std::span<const double> test_row(std::size_t i) const {
    return std::span<const double>(test_x).subspan(i * width, width);
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

namespace detail {

// Fixed stream ids so data, initialization and sampling never share draws.
inline constexpr std::uint64_t kDataStream = 0x44415441;   // "DATA"
inline constexpr std::uint64_t kSplitStream = 0x53504c54;  // "SPLT"

/// Moves rows into train/test by a seeded permutation; the first n_train permuted rows train.
inline Dataset split_rows(std::size_t width, const std::vector<double>& x, const std::vector<double>& y,
                          std::size_t n_train, int num_classes, std::uint64_t seed) {
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream rng(seed, kSplitStream);
  rng.shuffle(std::span<std::size_t>(order));
  Dataset d;
  d.width = width;
  d.num_classes = num_classes;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t row = order[pos];
    auto& xs = pos < n_train ? d.train_x : d.test_x;
    auto& ys = pos < n_train ? d.train_y : d.test_y;
    xs.insert(xs.end(), x.begin() + static_cast<std::ptrdiff_t>(row * width),
              x.begin() + static_cast<std::ptrdiff_t>((row + 1) * width));
    ys.push_back(y[row]);
  }
  return d;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_number(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) return std::nullopt;
  return value;
}

/// Class labels are non-negative integers; anything else is a regression target.
inline int infer_num_classes(const std::vector<double>& labels) {
  double top = -1.0;
  for (double y : labels) {
    if (y < 0.0 || y != std::floor(y) || y > 1e6) return 0;
    top = std::max(top, y);
  }
  return labels.empty() ? 0 : std::max(2, static_cast<int>(top) + 1);
}

}  // namespace detail

enum class SyntheticKind { two_gaussians, linear_regression };

struct SyntheticOptions {
  double test_fraction = 0.2;
  /// two_gaussians: class means sit at +-separation along a unit diagonal (unit variance).
  double separation = 3.0;
  /// linear_regression: standard deviation of additive target noise.
  double noise = 0.0;
};

/// Seed-deterministic synthetic dataset. two_gaussians alternates labels, so the
/// classes differ in size by at most one.
inline Dataset generate_synthetic(SyntheticKind kind, std::size_t n, std::size_t dim, std::uint64_t seed,
                                  const SyntheticOptions& options = {}) {
  if (n == 0 || dim == 0) throw ContractViolation("generate_synthetic: n and dim must be positive");
  if (!(options.test_fraction >= 0.0 && options.test_fraction < 1.0)) {
    throw ContractViolation("generate_synthetic: test_fraction must lie in [0, 1)");
  }
  RngStream rng(seed, detail::kDataStream);
  std::vector<double> x(n * dim);
  std::vector<double> y(n);
  int num_classes = 0;
  if (kind == SyntheticKind::two_gaussians) {
    num_classes = 2;
    const double offset = options.separation / std::sqrt(static_cast<double>(dim));
    for (std::size_t i = 0; i < n; ++i) {
      const int label = static_cast<int>(i % 2);
      y[i] = label;
      const double sign = label == 1 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < dim; ++j) x[i * dim + j] = sign * offset + rng.normal();
    }
  } else {
    std::vector<double> w(dim);
    for (auto& wj : w) wj = rng.normal();
    const double bias = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      double target = bias;
      for (std::size_t j = 0; j < dim; ++j) {
        x[i * dim + j] = rng.normal();
        target += w[j] * x[i * dim + j];
      }
      y[i] = target + options.noise * rng.normal();
    }
  }
  const auto n_test = static_cast<std::size_t>(std::floor(options.test_fraction * static_cast<double>(n)));
  return detail::split_rows(dim, x, y, n - n_test, num_classes, seed);
}

/// Reads a header + numeric CSV. `split_fraction` of the rows (rounded) go to train.
inline Dataset load_csv_dataset(const std::string& path, const std::string& label_column,
                                double split_fraction, std::uint64_t seed) {
  if (!(split_fraction > 0.0 && split_fraction <= 1.0)) {
    throw ConfigError("split_fraction", "must lie in (0, 1]");
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (detail::trim(view).empty()) continue;
    for (auto cell : detail::split_csv_line(view)) header.emplace_back(cell);
    break;
  }
  if (header.empty()) throw ParseError(line_no, 0, "'" + path + "' has no header row");
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw ConfigError("label_column", "column '" + label_column + "' not found in '" + path + "'");
  }
  const auto label_index = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t width = header.size() - 1;

  std::vector<double> x;
  std::vector<double> y;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(line_no, 0, "expected " + std::to_string(header.size()) + " cells, found " +
                                       std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto value = detail::parse_number(cells[c]);
      if (!value || !std::isfinite(*value)) {
        throw ParseError(line_no, c + 1, "non-numeric cell '" + std::string(cells[c]) + "' in column '" +
                                             header[c] + "'");
      }
      if (c == label_index) {
        y.push_back(*value);
      } else {
        x.push_back(*value);
      }
    }
  }
  if (y.empty()) throw ParseError(line_no, 0, "'" + path + "' has no data rows");
  const auto n_train = static_cast<std::size_t>(std::llround(split_fraction * static_cast<double>(y.size())));
  return detail::split_rows(width, x, y, std::max<std::size_t>(1, n_train), detail::infer_num_classes(y),
                            seed);
}

/// The objective J, with an analytic gradient. Batches index training rows;
/// the overloads without a batch are full-batch.
class Problem {
 public:
  virtual ~Problem() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::size_t dim() const = 0;
  [[nodiscard]] virtual double loss(std::span<const double> theta, std::span<const std::size_t> batch) const = 0;
  [[nodiscard]] virtual Vec64 grad(std::span<const double> theta, std::span<const std::size_t> batch) const = 0;
  [[nodiscard]] virtual double loss(std::span<const double> theta) const = 0;
  [[nodiscard]] virtual Vec64 grad(std::span<const double> theta) const = 0;
  [[nodiscard]] virtual std::optional<double> test_metric(std::span<const double>) const { return std::nullopt; }
  [[nodiscard]] virtual const Dataset* dataset() const { return nullptr; }
  /// Accuracy-style metrics improve upward; error-style metrics override this.
  [[nodiscard]] virtual bool metric_higher_is_better() const { return true; }
  /// Deterministic starting point; stochastic initializers draw from `rng`.
  [[nodiscard]] virtual Vec64 initial_point(RngStream& rng) const = 0;

 protected:
  void require_dim(std::span<const double> theta) const {
    if (theta.size() != dim()) {
      throw ContractViolation(name() + ": parameter dimension " + std::to_string(theta.size()) +
                              " does not match " + std::to_string(dim()));
    }
  }
};

/// Objectives without data; the batch argument is ignored.
class DeterministicProblem : public Problem {
 public:
  using Problem::grad;
  using Problem::loss;
  double loss(std::span<const double> theta, std::span<const std::size_t>) const override { return loss(theta); }
  Vec64 grad(std::span<const double> theta, std::span<const std::size_t>) const override { return grad(theta); }
};

/// J(theta) = 1/2 sum_i lambda_i theta_i^2.
class QuadraticProblem final : public DeterministicProblem {
 public:
  explicit QuadraticProblem(std::vector<double> spectrum) : spectrum_(std::move(spectrum)) {
    if (spectrum_.empty()) throw ContractViolation("quadratic: spectrum must be non-empty");
    for (double l : spectrum_) {
      if (!(l > 0.0) || !std::isfinite(l)) throw ContractViolation("quadratic: spectrum must be positive");
    }
  }

  using DeterministicProblem::grad;
  using DeterministicProblem::loss;
  std::string name() const override { return "quadratic"; }
  std::size_t dim() const override { return spectrum_.size(); }
  double loss(std::span<const double> theta) const override {
    require_dim(theta);
    double acc = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) acc += spectrum_[i] * theta[i] * theta[i];
    return 0.5 * acc;
  }
  Vec64 grad(std::span<const double> theta) const override {
    require_dim(theta);
    Vec64 g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) g[i] = spectrum_[i] * theta[i];
    return g;
  }
  Vec64 initial_point(RngStream&) const override { return Vec64(dim(), 1.0); }
  const std::vector<double>& spectrum() const noexcept { return spectrum_; }

 private:
  std::vector<double> spectrum_;
};

/// Chained Rosenbrock: sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2. Minimum 0 at all-ones.
class RosenbrockProblem final : public DeterministicProblem {
 public:
  explicit RosenbrockProblem(std::size_t dim = 2) : dim_(dim) {
    if (dim_ < 2) throw ContractViolation("rosenbrock: dimension must be >= 2");
  }

  using DeterministicProblem::grad;
  using DeterministicProblem::loss;
  std::string name() const override { return "rosenbrock"; }
  std::size_t dim() const override { return dim_; }
  double loss(std::span<const double> x) const override {
    require_dim(x);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double a = x[i + 1] - x[i] * x[i];
      const double b = 1.0 - x[i];
      acc += 100.0 * a * a + b * b;
    }
    return acc;
  }
  Vec64 grad(std::span<const double> x) const override {
    require_dim(x);
    Vec64 g(x.size());
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double a = x[i + 1] - x[i] * x[i];
      g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
      g[i + 1] += 200.0 * a;
    }
    return g;
  }
  /// (-1.2, 1, -1.2, 1, ...).
  Vec64 initial_point(RngStream&) const override {
    Vec64 x(dim_);
    for (std::size_t i = 0; i < dim_; ++i) x[i] = i % 2 == 0 ? -1.2 : 1.0;
    return x;
  }

 private:
  std::size_t dim_;
};

/// Base for objectives that average a per-example loss over training rows.
class DataProblem : public Problem {
 public:
  explicit DataProblem(std::shared_ptr<const Dataset> data) : data_(std::move(data)) {
    if (!data_ || data_->n_train() == 0) throw ContractViolation("problem needs a non-empty training set");
    all_rows_.resize(data_->n_train());
    std::iota(all_rows_.begin(), all_rows_.end(), std::size_t{0});
  }

  using Problem::grad;
  using Problem::loss;
  double loss(std::span<const double> theta) const override { return loss(theta, all_rows_); }
  Vec64 grad(std::span<const double> theta) const override { return grad(theta, all_rows_); }
  const Dataset* dataset() const override { return data_.get(); }

  double loss(std::span<const double> theta, std::span<const std::size_t> batch) const override {
    require_dim(theta);
    require_batch(batch);
    double acc = 0.0;
    for (std::size_t row : canonical(batch)) {
      acc += example_loss(theta, data_->train_row(row), data_->train_y[row], nullptr);
    }
    return acc / static_cast<double>(batch.size());
  }

  Vec64 grad(std::span<const double> theta, std::span<const std::size_t> batch) const override {
    require_dim(theta);
    require_batch(batch);
    Vec64 g(dim());
    for (std::size_t row : canonical(batch)) example_loss(theta, data_->train_row(row), data_->train_y[row], &g);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& gi : g) gi *= inv;
    return g;
  }

 protected:
  /// Loss of one example; when `grad_acc` is set, adds the example gradient into it.
  virtual double example_loss(std::span<const double> theta, std::span<const double> x, double y,
                              Vec64* grad_acc) const = 0;

  const Dataset& data() const { return *data_; }

  void require_batch(std::span<const std::size_t> batch) const {
    if (batch.empty()) throw ContractViolation(name() + ": empty batch");
    for (std::size_t row : batch) {
      if (row >= data_->n_train()) throw ContractViolation(name() + ": batch index out of range");
    }
  }

  /// Rows in ascending order, so a batch's sum does not depend on how it was drawn.
  static std::vector<std::size_t> canonical(std::span<const std::size_t> batch) {
    std::vector<std::size_t> rows(batch.begin(), batch.end());
    std::sort(rows.begin(), rows.end());
    return rows;
  }

  /// Fraction of test rows whose arg-max class matches the label.
  template <class Predict>
  std::optional<double> test_accuracy(Predict&& predict) const {
    if (data_->n_test() == 0 || data_->num_classes < 2) return std::nullopt;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data_->n_test(); ++i) {
      if (predict(data_->test_row(i)) == static_cast<int>(data_->test_y[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data_->n_test());
  }

 private:
  std::shared_ptr<const Dataset> data_;
  std::vector<std::size_t> all_rows_;
};

namespace detail {
/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}
}  // namespace detail

/// Binary logistic regression, parameters (w, b). Labels must be 0 or 1.
class LogisticRegressionProblem final : public DataProblem {
 public:
  explicit LogisticRegressionProblem(std::shared_ptr<const Dataset> data) : DataProblem(std::move(data)) {
    if (this->data().num_classes != 2) throw ContractViolation("logistic_regression: needs binary 0/1 labels");
  }

  std::string name() const override { return "logistic_regression"; }
  std::size_t dim() const override { return data().width + 1; }
  std::optional<double> test_metric(std::span<const double> theta) const override {
    require_dim(theta);
    return test_accuracy([&](std::span<const double> x) { return score(theta, x) > 0.0 ? 1 : 0; });
  }
  Vec64 initial_point(RngStream&) const override { return Vec64(dim()); }

 protected:
  double example_loss(std::span<const double> theta, std::span<const double> x, double y,
                      Vec64* grad_acc) const override {
    const double z = score(theta, x);
    if (grad_acc != nullptr) {
      const double r = detail::sigmoid(z) - y;
      for (std::size_t j = 0; j < x.size(); ++j) (*grad_acc)[j] += r * x[j];
      (*grad_acc)[x.size()] += r;
    }
    return detail::softplus(z) - y * z;
  }

 private:
  static double score(std::span<const double> theta, std::span<const double> x) {
    double z = theta[x.size()];
    for (std::size_t j = 0; j < x.size(); ++j) z += theta[j] * x[j];
    return z;
  }
};

/// Linear model with squared error 1/2 (w.x + b - y)^2; test metric is the test MSE.
class LeastSquaresProblem final : public DataProblem {
 public:
  explicit LeastSquaresProblem(std::shared_ptr<const Dataset> data) : DataProblem(std::move(data)) {}

  std::string name() const override { return "least_squares"; }
  bool metric_higher_is_better() const override { return false; }
  std::size_t dim() const override { return data().width + 1; }
  std::optional<double> test_metric(std::span<const double> theta) const override {
    require_dim(theta);
    if (data().n_test() == 0) return std::nullopt;
    double acc = 0.0;
    for (std::size_t i = 0; i < data().n_test(); ++i) {
      const double r = predict(theta, data().test_row(i)) - data().test_y[i];
      acc += r * r;
    }
    return acc / static_cast<double>(data().n_test());
  }
  Vec64 initial_point(RngStream&) const override { return Vec64(dim()); }

 protected:
  double example_loss(std::span<const double> theta, std::span<const double> x, double y,
                      Vec64* grad_acc) const override {
    const double r = predict(theta, x) - y;
    if (grad_acc != nullptr) {
      for (std::size_t j = 0; j < x.size(); ++j) (*grad_acc)[j] += r * x[j];
      (*grad_acc)[x.size()] += r;
    }
    return 0.5 * r * r;
  }

 private:
  static double predict(std::span<const double> theta, std::span<const double> x) {
    double z = theta[x.size()];
    for (std::size_t j = 0; j < x.size(); ++j) z += theta[j] * x[j];
    return z;
  }
};

enum class Activation { tanh, relu };

/// Fully connected network with softmax cross-entropy on the last layer.
/// Parameters are stored layer by layer: W (out x in, row-major) then b (out).
class TinyMlpProblem final : public DataProblem {
 public:
  TinyMlpProblem(std::shared_ptr<const Dataset> data, std::vector<std::size_t> widths, Activation activation)
      : DataProblem(std::move(data)), widths_(std::move(widths)), activation_(activation) {
    if (widths_.size() < 2) throw ContractViolation("tiny_mlp: need at least input and output widths");
    if (std::find(widths_.begin(), widths_.end(), std::size_t{0}) != widths_.end()) {
      throw ContractViolation("tiny_mlp: layer widths must be positive");
    }
    if (widths_.front() != this->data().width) {
      throw ContractViolation("tiny_mlp: input width " + std::to_string(widths_.front()) +
                              " does not match dataset width " + std::to_string(this->data().width));
    }
    if (this->data().num_classes < 2 || widths_.back() != static_cast<std::size_t>(this->data().num_classes)) {
      throw ContractViolation("tiny_mlp: output width must equal the number of classes");
    }
    dim_ = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) dim_ += widths_[l + 1] * (widths_[l] + 1);
  }

  std::string name() const override { return "tiny_mlp"; }
  std::size_t dim() const override { return dim_; }
  const std::vector<std::size_t>& widths() const noexcept { return widths_; }

  std::optional<double> test_metric(std::span<const double> theta) const override {
    require_dim(theta);
    return test_accuracy([&](std::span<const double> x) { return predict(theta, x); });
  }

  /// Weights and biases uniform in +-1/sqrt(fan_in).
  Vec64 initial_point(RngStream& rng) const override {
    Vec64 theta(dim_);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
      const std::size_t count = widths_[l + 1] * (widths_[l] + 1);
      for (std::size_t i = 0; i < count; ++i) theta[offset + i] = rng.uniform(-bound, bound);
      offset += count;
    }
    return theta;
  }

  int predict(std::span<const double> theta, std::span<const double> x) const {
    std::vector<std::vector<double>> acts;
    forward(theta, x, acts);
    const auto& logits = acts.back();
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }

 protected:
  double example_loss(std::span<const double> theta, std::span<const double> x, double y,
                      Vec64* grad_acc) const override {
    std::vector<std::vector<double>> acts;
    forward(theta, x, acts);
    const auto& logits = acts.back();
    const auto label = static_cast<std::size_t>(y);
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - top);
    const double log_norm = top + std::log(sum);
    const double loss = log_norm - logits[label];
    if (grad_acc == nullptr) return loss;

    // delta = dLoss/d(pre-activation) of the current layer, starting with softmax - onehot.
    std::vector<double> delta(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) delta[c] = std::exp(logits[c] - log_norm);
    delta[label] -= 1.0;

    std::size_t offset = dim_;
    for (std::size_t l = widths_.size() - 1; l-- > 0;) {
      const std::size_t in = widths_[l];
      const std::size_t out = widths_[l + 1];
      offset -= out * (in + 1);
      const std::span<const double> a_in = l == 0 ? x : std::span<const double>(acts[l - 1]);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) (*grad_acc)[offset + o * in + i] += delta[o] * a_in[i];
        (*grad_acc)[offset + out * in + o] += delta[o];
      }
      if (l == 0) break;
      std::vector<double> prev(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t i = 0; i < in; ++i) prev[i] += theta[offset + o * in + i] * delta[o];
      }
      const auto& h = acts[l - 1];
      for (std::size_t i = 0; i < in; ++i) prev[i] *= activation_derivative(h[i]);
      delta = std::move(prev);
    }
    return loss;
  }

 private:
  /// acts[l] holds the output of layer l: activated for hidden layers, raw logits for the last.
  void forward(std::span<const double> theta, std::span<const double> x,
               std::vector<std::vector<double>>& acts) const {
    acts.assign(widths_.size() - 1, {});
    std::size_t offset = 0;
    std::span<const double> input = x;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      const std::size_t in = widths_[l];
      const std::size_t out = widths_[l + 1];
      auto& z = acts[l];
      z.assign(out, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        double s = theta[offset + out * in + o];
        for (std::size_t i = 0; i < in; ++i) s += theta[offset + o * in + i] * input[i];
        const bool hidden = l + 2 < widths_.size();
        z[o] = hidden ? activate(s) : s;
      }
      offset += out * (in + 1);
      input = z;
    }
  }

  double activate(double s) const { return activation_ == Activation::tanh ? std::tanh(s) : std::max(0.0, s); }

  /// Derivative expressed through the activated value h.
  double activation_derivative(double h) const {
    return activation_ == Activation::tanh ? 1.0 - h * h : (h > 0.0 ? 1.0 : 0.0);
  }

  std::vector<std::size_t> widths_;
  Activation activation_;
  std::size_t dim_ = 0;
};

enum class SamplingOrder { shuffled_epoch, iid };

/// One draw from a sampler. `id` counts batches from 0 so a run can be replayed.
struct Batch {
  std::uint64_t id = 0;
  std::vector<std::size_t> indices;
};

/// Draws training-row batches. Shuffled-epoch order visits every row once per
/// epoch; the last batch of an epoch may be short.
class MiniBatchSampler {
 public:
  MiniBatchSampler(std::size_t n, std::size_t batch_size, SamplingOrder order, RngStream rng)
      : n_(n), batch_size_(batch_size), order_(order), rng_(std::move(rng)) {
    if (n_ == 0) throw ContractViolation("sampler: empty dataset");
    if (batch_size_ == 0) throw ContractViolation("sampler: batch size must be positive");
    batch_size_ = std::min(batch_size_, n_);
    permutation_.resize(n_);
    std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
    cursor_ = n_;
  }

  Batch next() {
    Batch batch{next_id_++, {}};
    batch.indices.reserve(batch_size_);
    if (order_ == SamplingOrder::iid) {
      for (std::size_t i = 0; i < batch_size_; ++i) batch.indices.push_back(rng_.index(n_));
      return batch;
    }
    if (cursor_ >= n_) {
      rng_.shuffle(std::span<std::size_t>(permutation_));
      cursor_ = 0;
      ++epoch_;
    }
    const std::size_t end = std::min(n_, cursor_ + batch_size_);
    batch.indices.assign(permutation_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                         permutation_.begin() + static_cast<std::ptrdiff_t>(end));
    cursor_ = end;
    return batch;
  }

  /// Batches per epoch in shuffled order.
  [[nodiscard]] std::size_t batches_per_epoch() const noexcept { return (n_ + batch_size_ - 1) / batch_size_; }
  [[nodiscard]] std::size_t batch_size() const noexcept { return batch_size_; }
  [[nodiscard]] SamplingOrder order() const noexcept { return order_; }
  [[nodiscard]] std::uint64_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t n_;
  std::size_t batch_size_;
  SamplingOrder order_;
  RngStream rng_;
  std::vector<std::size_t> permutation_;
  std::size_t cursor_ = 0;
  std::uint64_t epoch_ = 0;
  std::uint64_t next_id_ = 0;
};

struct MinibatchGradient {
  Vec64 grad;
  Batch batch;
};

/// Mean gradient over the next sampled batch.
inline MinibatchGradient minibatch_grad(const Problem& problem, std::span<const double> theta,
                                        MiniBatchSampler& sampler) {
  const Dataset* data = problem.dataset();
  if (data == nullptr || data->n_train() == 0) {
    throw ContractViolation("minibatch_grad: " + problem.name() + " has no dataset");
  }
  Batch batch = sampler.next();
  Vec64 g = problem.grad(theta, batch.indices);
  return {std::move(g), std::move(batch)};
}

struct Evaluation {
  double loss = 0.0;
  std::optional<double> metric;
};

/// Full-batch loss plus the test metric when the problem defines one.
inline Evaluation evaluate(const Problem& problem, std::span<const double> theta, std::int64_t step = 0) {
  const double loss = problem.loss(theta);
  if (!std::isfinite(loss)) throw DivergenceError(step, "evaluate: non-finite loss on " + problem.name());
  return {loss, problem.test_metric(theta)};
}

enum class ProblemKind { quadratic, rosenbrock, logistic_regression, tiny_mlp, least_squares };

inline std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::quadratic: return "quadratic";
    case ProblemKind::rosenbrock: return "rosenbrock";
    case ProblemKind::logistic_regression: return "logistic_regression";
    case ProblemKind::tiny_mlp: return "tiny_mlp";
    case ProblemKind::least_squares: return "least_squares";
  }
  return "unknown";
}

inline std::optional<ProblemKind> problem_kind_from_string(std::string_view name) {
  for (auto kind : {ProblemKind::quadratic, ProblemKind::rosenbrock, ProblemKind::logistic_regression,
                    ProblemKind::tiny_mlp, ProblemKind::least_squares}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

inline std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

struct ProblemParams {
  std::vector<double> spectrum{1.0, 10.0};
  std::size_t dim = 2;
  /// tiny_mlp hidden layer widths; input and output widths come from the dataset.
  std::vector<std::size_t> hidden{8};
  Activation activation = Activation::tanh;
  std::shared_ptr<const Dataset> dataset;
};

inline std::shared_ptr<const Problem> make_problem(ProblemKind kind, const ProblemParams& params) {
  switch (kind) {
    case ProblemKind::quadratic: return std::make_shared<QuadraticProblem>(params.spectrum);
    case ProblemKind::rosenbrock: return std::make_shared<RosenbrockProblem>(params.dim);
    case ProblemKind::logistic_regression:
      return std::make_shared<LogisticRegressionProblem>(params.dataset);
    case ProblemKind::least_squares: return std::make_shared<LeastSquaresProblem>(params.dataset);
    case ProblemKind::tiny_mlp: {
      if (!params.dataset) throw ContractViolation("tiny_mlp: needs a dataset");
      std::vector<std::size_t> widths{params.dataset->width};
      widths.insert(widths.end(), params.hidden.begin(), params.hidden.end());
      widths.push_back(static_cast<std::size_t>(std::max(params.dataset->num_classes, 0)));
      return std::make_shared<TinyMlpProblem>(params.dataset, std::move(widths), params.activation);
    }
  }
  throw ContractViolation("make_problem: unknown kind");
}

}  // namespace innaprop
