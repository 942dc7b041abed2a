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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "innaprop/optimizers.hpp"
#include "innaprop/problems.hpp"

namespace innaprop {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<const Dataset> gaussians(std::size_t n, std::uint64_t seed, std::size_t dim = 2) {
  return std::make_shared<const Dataset>(generate_synthetic(SyntheticKind::two_gaussians, n, dim, seed));
}

std::shared_ptr<const Dataset> regression(std::size_t n, std::uint64_t seed, double noise = 0.1) {
  SyntheticOptions o;
  o.noise = noise;
  return std::make_shared<const Dataset>(generate_synthetic(SyntheticKind::linear_regression, n, 3, seed, o));
}

fs::path write_file(const std::string& name, const std::string& body) {
  const fs::path dir = fs::temp_directory_path() / "innaprop_problem_tests";
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream(path) << body;
  return path;
}

TEST(Quadratic, LossAndGradient) {
  const QuadraticProblem q({1.0, 10.0});
  const Vec64 theta{1.0, 1.0};
  EXPECT_EQ(q.loss(theta.span()), 5.5);
  EXPECT_EQ(q.grad(theta.span()), (Vec64{1.0, 10.0}));
}

TEST(Quadratic, RejectsNonPositiveSpectrum) {
  EXPECT_THROW(QuadraticProblem({1.0, 0.0}), ContractViolation);
  EXPECT_THROW(QuadraticProblem({}), ContractViolation);
  EXPECT_THROW((void)make_problem(ProblemKind::quadratic, ProblemParams{{-1.0}, 1, {}, Activation::tanh, nullptr}),
               ContractViolation);
}

TEST(Rosenbrock, Minimum) {
  const RosenbrockProblem r(2);
  const Vec64 ones{1.0, 1.0};
  EXPECT_EQ(r.loss(ones.span()), 0.0);
  EXPECT_EQ(r.grad(ones.span()), (Vec64{0.0, 0.0}));
}

TEST(Rosenbrock, NonNegativeWithUniqueZero) {
  const RosenbrockProblem r(2);
  RngStream rng(17, 0);
  Vec64 x(2);
  for (int i = 0; i < 1000000; ++i) {
    x[0] = rng.uniform(-3.0, 3.0);
    x[1] = rng.uniform(-3.0, 3.0);
    const double f = r.loss(x.span());
    ASSERT_GT(f, 0.0);
  }
}

TEST(Problem, DimensionMismatch) {
  const RosenbrockProblem r(3);
  EXPECT_THROW((void)r.loss(Vec64{1.0, 1.0}.span()), ContractViolation);
}

void expect_gradient_fidelity(const Problem& problem, const std::function<Vec64(RngStream&)>& point) {
  RngStream rng(2024, 0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec64 theta = point(rng);
    worst = std::max(worst, max_rel_error(fd_gradient(problem, theta), problem.grad(theta.span())));
  }
  EXPECT_LT(worst, 1e-6) << problem.name();
}

Vec64 normal_point(RngStream& rng, std::size_t n, double scale) {
  Vec64 v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

TEST(GradientFidelity, EveryProblemKind) {
  const QuadraticProblem quad({1.0, 10.0, 100.0});
  expect_gradient_fidelity(quad, [](RngStream& r) { return normal_point(r, 3, 1.0); });
  const RosenbrockProblem rosen(4);
  expect_gradient_fidelity(rosen, [](RngStream& r) {
    Vec64 v(4);
    for (auto& x : v) x = r.uniform(-2.0, 2.0);
    return v;
  });
  const LogisticRegressionProblem logistic(gaussians(80, 3, 3));
  expect_gradient_fidelity(logistic, [](RngStream& r) { return normal_point(r, 4, 1.0); });
  const LeastSquaresProblem ls(regression(60, 4));
  expect_gradient_fidelity(ls, [](RngStream& r) { return normal_point(r, 4, 1.0); });
  const TinyMlpProblem tanh_mlp(gaussians(40, 5), {2, 8, 2}, Activation::tanh);
  expect_gradient_fidelity(tanh_mlp, [&](RngStream& r) { return tanh_mlp.initial_point(r); });
  const TinyMlpProblem deep(gaussians(40, 6), {2, 6, 5, 2}, Activation::tanh);
  expect_gradient_fidelity(deep, [&](RngStream& r) { return normal_point(r, deep.dim(), 0.7); });
  const TinyMlpProblem relu_mlp(gaussians(40, 7), {2, 8, 2}, Activation::relu);
  expect_gradient_fidelity(relu_mlp, [&](RngStream& r) { return relu_mlp.initial_point(r); });
}

TEST(TinyMlp, ParameterCount) {
  const TinyMlpProblem mlp(gaussians(10, 1), {2, 8, 2}, Activation::tanh);
  EXPECT_EQ(mlp.dim(), 2u * 8 + 8 + 8 * 2 + 2);
}

TEST(TinyMlp, InvalidArchitecture) {
  const auto data = gaussians(10, 1);
  EXPECT_THROW(TinyMlpProblem(data, {3, 8, 2}, Activation::tanh), ContractViolation);
  EXPECT_THROW(TinyMlpProblem(data, {2, 8, 3}, Activation::tanh), ContractViolation);
  EXPECT_THROW(TinyMlpProblem(data, {2, 0, 2}, Activation::tanh), ContractViolation);
  EXPECT_THROW(TinyMlpProblem(data, {2}, Activation::tanh), ContractViolation);
  EXPECT_THROW(TinyMlpProblem(regression(10, 1), {3, 4, 2}, Activation::tanh), ContractViolation);
  EXPECT_THROW((void)make_problem(ProblemKind::tiny_mlp, {}), ContractViolation);
}

TEST(TinyMlp, InitIsSeedDeterministicAndBounded) {
  const TinyMlpProblem mlp(gaussians(10, 1), {2, 8, 2}, Activation::tanh);
  RngStream a(3, 0);
  RngStream b(3, 0);
  const Vec64 x = mlp.initial_point(a);
  EXPECT_EQ(x, mlp.initial_point(b));
  for (std::size_t i = 0; i < 24; ++i) EXPECT_LE(std::abs(x[i]), 1.0 / std::sqrt(2.0));
  for (std::size_t i = 24; i < x.size(); ++i) EXPECT_LE(std::abs(x[i]), 1.0 / std::sqrt(8.0));
}

TEST(TinyMlp, StableForExtremeLogits) {
  const TinyMlpProblem mlp(gaussians(10, 1), {2, 2}, Activation::tanh);
  const Vec64 theta{800, 0, -800, 0, 0, 0};
  EXPECT_TRUE(std::isfinite(mlp.loss(theta.span())));
  EXPECT_TRUE(mlp.grad(theta.span()).all_finite());
}

TEST(Minibatch, FullBatchEqualsGradExactly) {
  const auto data = gaussians(50, 2);
  const TinyMlpProblem mlp(data, {2, 8, 2}, Activation::tanh);
  RngStream rng(1, 0);
  const Vec64 theta = mlp.initial_point(rng);
  MiniBatchSampler sampler(data->n_train(), data->n_train(), SamplingOrder::shuffled_epoch, RngStream(5, 1));
  const auto mb = minibatch_grad(mlp, theta.span(), sampler);
  EXPECT_EQ(mb.grad, mlp.grad(theta.span()));
  EXPECT_EQ(mb.batch.id, 0u);
}

TEST(Minibatch, FullBatchIsMeanOfSingletons) {
  const auto data = gaussians(50, 2);
  const TinyMlpProblem mlp(data, {2, 8, 2}, Activation::tanh);
  RngStream rng(1, 0);
  const Vec64 theta = mlp.initial_point(rng);
  Vec64 mean(mlp.dim());
  for (std::size_t i = 0; i < data->n_train(); ++i) {
    const std::size_t row[] = {i};
    const Vec64 g = mlp.grad(theta.span(), row);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += g[j] / static_cast<double>(data->n_train());
  }
  const Vec64 full = mlp.grad(theta.span());
  for (std::size_t j = 0; j < mean.size(); ++j) EXPECT_NEAR(mean[j], full[j], 1e-12);
}

TEST(Minibatch, DuplicatedExampleGivesIdenticalGradients) {
  auto d = std::make_shared<Dataset>();
  d->width = 2;
  d->num_classes = 2;
  d->train_x = {0.5, -1.0, 0.5, -1.0, 2.0, 1.0};
  d->train_y = {1, 1, 0};
  const LogisticRegressionProblem lr(d);
  const Vec64 theta{0.3, -0.2, 0.1};
  const std::size_t first[] = {0};
  const std::size_t second[] = {1};
  EXPECT_EQ(lr.grad(theta.span(), first), lr.grad(theta.span(), second));
}

TEST(Minibatch, RequiresDataset) {
  const QuadraticProblem q({1.0});
  MiniBatchSampler sampler(4, 2, SamplingOrder::iid, RngStream(1, 1));
  EXPECT_THROW((void)minibatch_grad(q, Vec64{1.0}.span(), sampler), ContractViolation);
  EXPECT_THROW(MiniBatchSampler(0, 2, SamplingOrder::iid, RngStream(1, 1)), ContractViolation);
  EXPECT_THROW(MiniBatchSampler(4, 0, SamplingOrder::iid, RngStream(1, 1)), ContractViolation);
}

TEST(Sampler, ShuffledEpochVisitsEachRowOnce) {
  MiniBatchSampler sampler(103, 10, SamplingOrder::shuffled_epoch, RngStream(7, 3));
  EXPECT_EQ(sampler.batches_per_epoch(), 11u);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::multiset<std::size_t> seen;
    for (std::size_t b = 0; b < sampler.batches_per_epoch(); ++b) {
      const auto batch = sampler.next();
      seen.insert(batch.indices.begin(), batch.indices.end());
    }
    ASSERT_EQ(seen.size(), 103u);
    ASSERT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), 103u);
  }
}

TEST(Sampler, SeedDeterministic) {
  for (auto order : {SamplingOrder::shuffled_epoch, SamplingOrder::iid}) {
    MiniBatchSampler a(40, 7, order, RngStream(9, 2));
    MiniBatchSampler b(40, 7, order, RngStream(9, 2));
    for (int i = 0; i < 50; ++i) {
      const auto x = a.next();
      const auto y = b.next();
      ASSERT_EQ(x.indices, y.indices);
      ASSERT_EQ(x.id, y.id);
      for (auto idx : x.indices) ASSERT_LT(idx, 40u);
    }
  }
}

TEST(Synthetic, BitwiseReproducible) {
  EXPECT_EQ(generate_synthetic(SyntheticKind::two_gaussians, 200, 2, 7),
            generate_synthetic(SyntheticKind::two_gaussians, 200, 2, 7));
  EXPECT_NE(generate_synthetic(SyntheticKind::two_gaussians, 200, 2, 7),
            generate_synthetic(SyntheticKind::two_gaussians, 200, 2, 8));
}

TEST(Synthetic, BalancedLabelsAndDisjointSplit) {
  for (std::size_t n : {199u, 200u, 201u}) {
    const auto d = generate_synthetic(SyntheticKind::two_gaussians, n, 3, 11);
    double ones = 0.0;
    for (double y : d.train_y) ones += y;
    for (double y : d.test_y) ones += y;
    EXPECT_LE(std::abs(2.0 * ones - static_cast<double>(n)), 1.0);
    EXPECT_EQ(d.n_train() + d.n_test(), n);
    EXPECT_EQ(d.n_test(), static_cast<std::size_t>(0.2 * static_cast<double>(n)));
    EXPECT_EQ(d.train_x.size(), d.n_train() * 3);
    EXPECT_EQ(d.test_x.size(), d.n_test() * 3);
  }
}

TEST(Synthetic, SeparatedGaussiansAreLinearlyClassifiable) {
  const auto data = gaussians(400, 13);
  const LogisticRegressionProblem lr(data);
  Vec64 theta(lr.dim());
  for (int k = 0; k < 2000; ++k) {
    const Vec64 g = lr.grad(theta.span());
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= 0.5 * g[i];
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data->n_train(); ++i) {
    const auto x = data->train_row(i);
    const double z = theta[0] * x[0] + theta[1] * x[1] + theta[2];
    if ((z > 0.0 ? 1.0 : 0.0) == data->train_y[i]) ++hits;
  }
  EXPECT_GT(static_cast<double>(hits) / static_cast<double>(data->n_train()), 0.99);
}

TEST(Synthetic, NoiselessRegressionIsExactlyRecoverable) {
  const auto data = regression(100, 21, 0.0);
  // Normal equations for [X 1] w = y, solved by Gaussian elimination with pivoting.
  const std::size_t p = data->width + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < data->n_train(); ++r) {
    std::vector<double> row(data->train_row(r).begin(), data->train_row(r).end());
    row.push_back(1.0);
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < p; ++j) a[i][j] += row[i] * row[j];
      a[i][p] += row[i] * data->train_y[r];
    }
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[pivot][c])) pivot = r;
    }
    std::swap(a[c], a[pivot]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= p; ++j) a[r][j] -= f * a[c][j];
    }
  }
  Vec64 w(p);
  for (std::size_t i = 0; i < p; ++i) w[i] = a[i][p] / a[i][i];
  const LeastSquaresProblem ls(data);
  EXPECT_LT(std::sqrt(2.0 * ls.loss(w.span())), 1e-8);
  EXPECT_LT(*ls.test_metric(w.span()), 1e-16);
}

TEST(Synthetic, RejectsEmpty) {
  EXPECT_THROW((void)generate_synthetic(SyntheticKind::two_gaussians, 0, 2, 1), ContractViolation);
  EXPECT_THROW((void)generate_synthetic(SyntheticKind::linear_regression, 5, 0, 1), ContractViolation);
}

TEST(Csv, FourRowsSplitInHalf) {
  const auto path = write_file("four.csv", "x1,x2,label\n1,2,0\n3,4,1\n5,6,0\n7,8,1\n");
  const Dataset a = load_csv_dataset(path.string(), "label", 0.5, 42);
  const Dataset b = load_csv_dataset(path.string(), "label", 0.5, 42);
  EXPECT_EQ(a.n_train(), 2u);
  EXPECT_EQ(a.n_test(), 2u);
  EXPECT_EQ(a.width, 2u);
  EXPECT_EQ(a.num_classes, 2);
  EXPECT_EQ(a, b);
}

TEST(Csv, LabelColumnAnywhereAndRealLabels) {
  const auto path = write_file("real.csv", "\xEF\xBB\xBFy, a , b\n0.5, 1, 2\r\n\n-1.25,3,4\n");
  const Dataset d = load_csv_dataset(path.string(), "y", 1.0, 1);
  EXPECT_EQ(d.num_classes, 0);
  EXPECT_EQ(d.n_train(), 2u);
  std::multiset<double> labels(d.train_y.begin(), d.train_y.end());
  EXPECT_EQ(labels, (std::multiset<double>{-1.25, 0.5}));
}

TEST(Csv, NonNumericCellNamesRowAndColumn) {
  const auto path = write_file("bad.csv", "a,b,label\n1,2,0\n3,oops,1\n");
  try {
    (void)load_csv_dataset(path.string(), "label", 0.5, 1);
    FAIL() << "expected parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 2u);
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
}

TEST(Csv, RaggedRowIsParseError) {
  const auto path = write_file("ragged.csv", "a,label\n1,0\n2\n");
  EXPECT_THROW((void)load_csv_dataset(path.string(), "label", 0.5, 1), ParseError);
}

TEST(Csv, MissingLabelIsConfigError) {
  const auto path = write_file("nolabel.csv", "a,b\n1,2\n");
  try {
    (void)load_csv_dataset(path.string(), "label", 0.5, 1);
    FAIL() << "expected config error";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "label_column");
  }
}

TEST(Csv, MissingFileIsIoError) {
  EXPECT_THROW((void)load_csv_dataset("/nonexistent/data.csv", "label", 0.5, 1), IoError);
}

TEST(Evaluate, QuadraticAtOrigin) {
  const QuadraticProblem q({1.0, 10.0});
  const auto e = evaluate(q, Vec64{0.0, 0.0}.span());
  EXPECT_EQ(e.loss, 0.0);
  EXPECT_FALSE(e.metric.has_value());
}

TEST(Evaluate, UninformativeLogisticIsCoinFlip) {
  SyntheticOptions o;
  o.test_fraction = 0.5;
  auto data = std::make_shared<const Dataset>(generate_synthetic(SyntheticKind::two_gaussians, 400, 2, 3, o));
  const LogisticRegressionProblem lr(data);
  const auto e = evaluate(lr, Vec64(3).span());
  ASSERT_TRUE(e.metric.has_value());
  EXPECT_NEAR(*e.metric, 0.5, 0.1);
  EXPECT_NEAR(e.loss, std::log(2.0), 1e-13);
}

TEST(Evaluate, NonFiniteLossIsDivergence) {
  const QuadraticProblem q({1.0});
  EXPECT_THROW((void)evaluate(q, Vec64{1e200}.span(), 7), DivergenceError);
}

TEST(Evaluate, TinyMlpLearnsSeparableData) {
  const auto data = gaussians(400, 31);
  const TinyMlpProblem mlp(data, {2, 8, 2}, Activation::tanh);
  RngStream rng(31, 0);
  const Vec64 theta0 = mlp.initial_point(rng);
  InnapropConfig cfg;
  cfg.alpha = 0.1;
  cfg.beta = 0.9;
  auto s = innaprop_init(cfg, theta0);
  auto adamw = reference_init(ReferenceKind::AdamW, theta0, {});
  for (int k = 0; k < 500; ++k) {
    s = innaprop_step(s, mlp.grad(s.theta.span()), 1e-2, cfg);
    adamw = adamw_step(adamw, mlp.grad(adamw.theta.span()), 1e-2, 0.9, 0.999, 1e-8, 0.0);
  }
  EXPECT_GT(*evaluate(mlp, adamw.theta.span()).metric, 0.95);
  EXPECT_GT(*evaluate(mlp, s.theta.span()).metric, 0.95);
}

TEST(Factory, BuildsEveryKind) {
  ProblemParams params;
  params.dataset = gaussians(20, 1);
  for (auto kind : {ProblemKind::quadratic, ProblemKind::rosenbrock, ProblemKind::logistic_regression,
                    ProblemKind::tiny_mlp, ProblemKind::least_squares}) {
    const auto p = make_problem(kind, params);
    EXPECT_EQ(p->name(), to_string(kind));
    EXPECT_EQ(problem_kind_from_string(to_string(kind)), kind);
  }
  EXPECT_FALSE(problem_kind_from_string("mnist").has_value());
}

}  // namespace
}  // namespace innaprop
