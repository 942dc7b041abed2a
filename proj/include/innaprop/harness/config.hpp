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
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "innaprop/errors.hpp"
#include "innaprop/numerics.hpp"
#include "innaprop/optim/momentum_variant.hpp"
#include "innaprop/problems.hpp"
#include "innaprop/schedulers.hpp"

namespace innaprop::harness {

using json = nlohmann::json;

enum class OptimizerKind {
  innaprop,
  innaprop_plain,
  inna,
  innaprop_momentum,
  dinadam,
  sgd,
  momentum,
  nesterov,
  rmsprop_momentum,
  adam,
  adamw,
  nadam,
};

inline constexpr OptimizerKind kAllOptimizers[] = {
    OptimizerKind::innaprop, OptimizerKind::innaprop_plain,   OptimizerKind::inna,
    OptimizerKind::innaprop_momentum, OptimizerKind::dinadam, OptimizerKind::sgd,
    OptimizerKind::momentum, OptimizerKind::nesterov,         OptimizerKind::rmsprop_momentum,
    OptimizerKind::adam,     OptimizerKind::adamw,            OptimizerKind::nadam,
};

inline std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::innaprop: return "innaprop";
    case OptimizerKind::innaprop_plain: return "innaprop_plain";
    case OptimizerKind::inna: return "inna";
    case OptimizerKind::innaprop_momentum: return "innaprop_momentum";
    case OptimizerKind::dinadam: return "dinadam";
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::momentum: return "momentum";
    case OptimizerKind::nesterov: return "nesterov";
    case OptimizerKind::rmsprop_momentum: return "rmsprop_momentum";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adamw: return "adamw";
    case OptimizerKind::nadam: return "nadam";
  }
  return "unknown";
}

/// Methods that divide by beta - gamma_k or discretize the inertial flow; they need beta > sup gamma_k.
inline bool needs_well_posedness(OptimizerKind kind) {
  return kind == OptimizerKind::innaprop || kind == OptimizerKind::innaprop_plain ||
         kind == OptimizerKind::inna || kind == OptimizerKind::innaprop_momentum;
}

enum class BudgetUnit { steps, epochs };
enum class DatasetSource { two_gaussians, linear_regression, csv };

/// Everything a run depends on. parse_config_text(emit_config(c).dump()) == c.
struct RunConfig {
  // Problem.
  ProblemKind problem = ProblemKind::quadratic;
  std::vector<double> spectrum{1.0, 10.0};
  std::size_t dim = 2;
  DatasetSource dataset = DatasetSource::two_gaussians;
  std::size_t n_samples = 512;
  std::size_t n_features = 2;
  double test_fraction = 0.2;
  double separation = 3.0;
  double noise = 0.1;
  std::string csv_path;
  std::string label_column = "label";
  double split_fraction = 0.8;
  std::vector<std::size_t> hidden{8};
  Activation activation = Activation::tanh;

  // Optimizer.
  OptimizerKind optimizer = OptimizerKind::innaprop;
  double alpha = 0.1;
  double beta = 0.9;
  double sigma = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  bool bias_correction = true;
  std::optional<double> grad_clip;
  MomentumForm momentum_form = MomentumForm::reduced;

  // Schedule; its index runs over steps or epochs, matching the budget unit.
  ScheduleSpec schedule{ScheduleKind::constant, 1e-3, 0.0, 100, 0, 100};

  // Budget and execution.
  BudgetUnit budget_unit = BudgetUnit::steps;
  std::int64_t budget = 100;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  SamplingOrder sampler = SamplingOrder::shuffled_epoch;
  std::uint64_t seed = 0;
  /// Selects an independent minibatch stream; data and initialization depend on `seed` only.
  std::uint64_t stream = 0;
  Precision precision = Precision::F64;
  std::int64_t log_every = 1;
  std::string output;

  // Flow integration (ode command).
  double t_end = 1.0;
  double dt = 1e-3;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline const std::vector<double>& default_grid() {
  static const std::vector<double> grid{0.1, 0.5, 0.9, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  return grid;
}

inline const std::vector<double>& default_lrs() {
  static const std::vector<double> lrs{1e-4, 5e-4, 1e-3, 5e-3, 1e-2};
  return lrs;
}

inline bool uses_dataset(ProblemKind kind) {
  return kind == ProblemKind::logistic_regression || kind == ProblemKind::tiny_mlp ||
         kind == ProblemKind::least_squares;
}

namespace detail {

template <class E>
struct Names {
  E value;
  const char* name;
};

inline constexpr Names<ProblemKind> kProblemNames[] = {
    {ProblemKind::quadratic, "quadratic"},
    {ProblemKind::rosenbrock, "rosenbrock"},
    {ProblemKind::logistic_regression, "logistic_regression"},
    {ProblemKind::tiny_mlp, "tiny_mlp"},
    {ProblemKind::least_squares, "least_squares"},
};
inline constexpr Names<DatasetSource> kDatasetNames[] = {
    {DatasetSource::two_gaussians, "two_gaussians"},
    {DatasetSource::linear_regression, "linear_regression"},
    {DatasetSource::csv, "csv"},
};
inline constexpr Names<Activation> kActivationNames[] = {{Activation::tanh, "tanh"}, {Activation::relu, "relu"}};
inline constexpr Names<MomentumForm> kFormNames[] = {{MomentumForm::direct, "direct"},
                                                     {MomentumForm::reduced, "reduced"}};
inline constexpr Names<SamplingOrder> kSamplerNames[] = {{SamplingOrder::shuffled_epoch, "shuffled"},
                                                         {SamplingOrder::iid, "iid"}};
inline constexpr Names<Precision> kPrecisionNames[] = {{Precision::F64, "f64"}, {Precision::F32, "f32"}};
inline constexpr Names<ScheduleKind> kScheduleNames[] = {
    {ScheduleKind::constant, "constant"},
    {ScheduleKind::cosine, "cosine"},
    {ScheduleKind::cosine_warmup, "cosine_warmup"},
    {ScheduleKind::linear_warmup, "linear_warmup"},
};

template <class E, std::size_t N>
std::string name_of(const Names<E> (&table)[N], E value) {
  for (const auto& entry : table) {
    if (entry.value == value) return entry.name;
  }
  return "unknown";
}

template <class E, std::size_t N>
E value_of(const Names<E> (&table)[N], const std::string& key, const std::string& name) {
  std::string choices;
  for (const auto& entry : table) {
    if (entry.name == name) return entry.value;
    choices += choices.empty() ? "" : ", ";
    choices += entry.name;
  }
  throw ConfigError(key, "unknown value '" + name + "' (expected one of: " + choices + ")");
}

/// Typed access to a flat JSON object; every key read is marked as known.
class Reader {
 public:
  explicit Reader(const json& object) : object_(object) {
    if (!object_.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return object_.contains(key) && !object_.at(key).is_null();
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = object_.at(key);
    if (!v.is_number()) throw ConfigError(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(key, "must be finite");
    return x;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = object_.at(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<std::int64_t>(x);
    }
    throw ConfigError(key, "expected an integer");
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const std::int64_t v = integer(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError(key, "must be >= 0");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = object_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(key, "expected a non-negative integer");
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = object_.at(key);
    if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = object_.at(key);
    if (!v.is_string()) throw ConfigError(key, "expected a string");
    return v.get<std::string>();
  }

  template <class E, std::size_t N>
  E choice(const std::string& key, const Names<E> (&table)[N], E fallback) {
    if (!has(key)) return fallback;
    return value_of(table, key, string(key, ""));
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    const json& v = object_.at(key);
    if (!v.is_array()) throw ConfigError(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(key, "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key, const std::vector<std::size_t>& fallback) {
    if (!has(key)) return fallback;
    const json& v = object_.at(key);
    if (!v.is_array()) throw ConfigError(key, "expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& x : v) {
      if (!x.is_number_integer() || x.get<std::int64_t>() <= 0) {
        throw ConfigError(key, "expected an array of positive integers");
      }
      out.push_back(static_cast<std::size_t>(x.get<std::int64_t>()));
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : object_.items()) {
      if (!known_.contains(key)) throw ConfigError(key, "unknown key");
    }
  }

 private:
  const json& object_;
  std::set<std::string> known_;
};

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace detail

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Compact form for messages.
inline std::string format_short(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

/// Number of schedule indices a run visits: steps, or epochs when the budget is in epochs.
inline std::int64_t schedule_indices(const RunConfig& c) { return c.budget; }

/// Checks every cross-field rule. Errors name the offending key.
inline void validate(const RunConfig& c) {
  using detail::require;
  require(c.budget > 0, c.budget_unit == BudgetUnit::epochs ? "epochs" : "steps", "must be positive");
  if (c.problem == ProblemKind::quadratic) {
    require(!c.spectrum.empty(), "spectrum", "must be non-empty");
    for (double l : c.spectrum) require(l > 0.0 && std::isfinite(l), "spectrum", "entries must be positive");
  }
  if (c.problem == ProblemKind::rosenbrock) require(c.dim >= 2, "dim", "must be >= 2");
  if (uses_dataset(c.problem)) {
    if (c.dataset == DatasetSource::csv) {
      require(!c.csv_path.empty(), "csv_path", "required when dataset is csv");
      require(!c.label_column.empty(), "label_column", "must be non-empty");
      require(c.split_fraction > 0.0 && c.split_fraction <= 1.0, "split_fraction", "must lie in (0, 1]");
    } else {
      require(c.n_samples > 0, "n_samples", "must be positive");
      require(c.n_features > 0, "n_features", "must be positive");
      require(c.test_fraction >= 0.0 && c.test_fraction < 1.0, "test_fraction", "must lie in [0, 1)");
      require(c.noise >= 0.0, "noise", "must be >= 0");
    }
    if (c.problem != ProblemKind::least_squares) {
      require(c.dataset != DatasetSource::linear_regression, "dataset",
              "classification problems need class labels");
    }
    for (std::size_t w : c.hidden) require(w > 0, "hidden", "widths must be positive");
  }

  require(c.alpha >= 0.0, "alpha", "must be >= 0");
  require(c.beta > 0.0 || c.optimizer == OptimizerKind::dinadam, "beta", "must be > 0");
  require(c.beta >= 0.0, "beta", "must be >= 0");
  require(c.sigma >= 0.0 && c.sigma <= 1.0, "sigma", "must lie in [0, 1]");
  const bool sigma_corrected = c.bias_correction && (c.optimizer == OptimizerKind::innaprop);
  require(!(sigma_corrected && c.sigma == 1.0), "sigma", "sigma = 1 makes the bias corrector vanish");
  require(c.epsilon >= 0.0, "epsilon", "must be >= 0");
  require(c.weight_decay >= 0.0, "weight_decay", "must be >= 0");
  require(c.beta1 >= 0.0 && c.beta1 < 1.0, "beta1", "must lie in [0, 1)");
  require(c.beta2 >= 0.0 && c.beta2 <= 1.0, "beta2", "must lie in [0, 1]");
  require(!(c.bias_correction && c.beta2 == 1.0), "beta2", "beta2 = 1 makes the bias corrector vanish");
  if (c.grad_clip) require(*c.grad_clip > 0.0, "grad_clip", "must be positive");

  const ScheduleSpec& s = c.schedule;
  require(s.gamma0 > 0.0, "lr", "must be positive");
  require(s.gamma_min >= 0.0 && s.gamma_min <= s.gamma0, "lr_min", "must lie in [0, lr]");
  require(s.t_max > 0, "t_max", "must be positive");
  require(s.t_warmup >= 0, "t_warmup", "must be >= 0");
  if (s.kind == ScheduleKind::cosine_warmup || s.kind == ScheduleKind::linear_warmup) {
    require(s.t_warmup < s.t_max, "t_warmup", "must be below t_max");
  }
  if (s.kind == ScheduleKind::cosine_warmup) require(s.t_decay >= s.t_warmup, "t_decay", "must be >= t_warmup");

  if (c.budget_unit == BudgetUnit::epochs) {
    require(uses_dataset(c.problem), "epochs", "needs a dataset problem; use steps");
  }
  require(schedule_indices(c) - 1 <= s.t_max, "t_max",
          "schedule must cover the budget (t_max >= " + std::to_string(schedule_indices(c) - 1) + ")");
  require(c.log_every > 0, "log_every", "must be positive");
  require(c.t_end > 0.0, "t_end", "must be positive");
  require(c.dt > 0.0, "dt", "must be positive");

  if (needs_well_posedness(c.optimizer)) {
    const double sup = sup_lr(s);
    require(sup < c.beta, "beta",
            "must exceed every learning rate the schedule emits (beta = " + format_short(c.beta) +
                ", sup lr = " + format_short(sup) + ")");
  }
  if (c.optimizer == OptimizerKind::innaprop_momentum) {
    for (std::int64_t k = 0; k <= s.t_max; ++k) {
      require(c.alpha * lr_at(s, k) != 1.0, "alpha", "alpha * lr = 1 makes the momentum recursion singular");
    }
  }
}

inline RunConfig parse_config_json(const json& object) {
  detail::Reader r(object);
  RunConfig c;
  c.problem = r.choice("problem", detail::kProblemNames, c.problem);
  c.spectrum = r.numbers("spectrum", c.spectrum);
  c.dim = r.count("dim", c.dim);
  c.dataset = r.choice("dataset", detail::kDatasetNames, c.dataset);
  c.n_samples = r.count("n_samples", c.n_samples);
  c.n_features = r.count("n_features", c.n_features);
  c.test_fraction = r.number("test_fraction", c.test_fraction);
  c.separation = r.number("separation", c.separation);
  c.noise = r.number("noise", c.noise);
  c.csv_path = r.string("csv_path", c.csv_path);
  c.label_column = r.string("label_column", c.label_column);
  c.split_fraction = r.number("split_fraction", c.split_fraction);
  c.hidden = r.counts("hidden", c.hidden);
  c.activation = r.choice("activation", detail::kActivationNames, c.activation);

  const std::string optimizer = r.string("optimizer", to_string(c.optimizer));
  bool found = false;
  for (auto kind : kAllOptimizers) {
    if (to_string(kind) == optimizer) {
      c.optimizer = kind;
      found = true;
    }
  }
  if (!found) throw ConfigError("optimizer", "unknown optimizer '" + optimizer + "'");
  c.alpha = r.number("alpha", c.alpha);
  c.beta = r.number("beta", c.beta);
  c.sigma = r.number("sigma", c.sigma);
  c.epsilon = r.number("epsilon", c.epsilon);
  c.weight_decay = r.number("weight_decay", c.weight_decay);
  c.beta1 = r.number("beta1", c.beta1);
  c.beta2 = r.number("beta2", c.beta2);
  c.bias_correction = r.boolean("bias_correction", c.bias_correction);
  if (r.has("grad_clip")) c.grad_clip = r.number("grad_clip", 0.0);
  c.momentum_form = r.choice("momentum_form", detail::kFormNames, c.momentum_form);

  const bool has_steps = r.has("steps");
  const bool has_epochs = r.has("epochs");
  if (has_steps && has_epochs) throw ConfigError("epochs", "give either steps or epochs, not both");
  if (has_epochs) {
    c.budget_unit = BudgetUnit::epochs;
    c.budget = r.integer("epochs", 0);
  } else {
    c.budget_unit = BudgetUnit::steps;
    c.budget = r.integer("steps", c.budget);
  }

  ScheduleSpec& s = c.schedule;
  s.kind = r.choice("schedule", detail::kScheduleNames, s.kind);
  s.gamma0 = r.number("lr", s.gamma0);
  s.gamma_min = r.number("lr_min", 0.0);
  s.t_max = r.integer("t_max", c.budget);
  s.t_warmup = r.integer("t_warmup", 0);
  s.t_decay = r.integer("t_decay", s.t_max);

  c.batch_size = r.count("batch_size", c.batch_size);
  c.sampler = r.choice("sampler", detail::kSamplerNames, c.sampler);
  c.seed = r.unsigned_integer("seed", c.seed);
  c.stream = r.unsigned_integer("stream", c.stream);
  c.precision = r.choice("precision", detail::kPrecisionNames, c.precision);
  c.log_every = r.integer("log_every", c.log_every);
  c.output = r.string("output", c.output);
  c.t_end = r.number("t_end", c.t_end);
  c.dt = r.number("dt", c.dt);

  r.reject_unknown();
  validate(c);
  return c;
}

inline RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>") {
  json object;
  try {
    object = json::parse(text);
  } catch (const json::parse_error& e) {
    // Convert the byte offset into a 1-based line and column.
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(line, column, source + ": malformed JSON");
  }
  return parse_config_json(object);
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

/// Canonical JSON form: every key, explicit values, sorted.
inline json emit_config(const RunConfig& c) {
  using detail::name_of;
  json j;
  j["problem"] = name_of(detail::kProblemNames, c.problem);
  j["spectrum"] = c.spectrum;
  j["dim"] = c.dim;
  j["dataset"] = name_of(detail::kDatasetNames, c.dataset);
  j["n_samples"] = c.n_samples;
  j["n_features"] = c.n_features;
  j["test_fraction"] = c.test_fraction;
  j["separation"] = c.separation;
  j["noise"] = c.noise;
  j["csv_path"] = c.csv_path;
  j["label_column"] = c.label_column;
  j["split_fraction"] = c.split_fraction;
  j["hidden"] = c.hidden;
  j["activation"] = name_of(detail::kActivationNames, c.activation);
  j["optimizer"] = to_string(c.optimizer);
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["sigma"] = c.sigma;
  j["epsilon"] = c.epsilon;
  j["weight_decay"] = c.weight_decay;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["bias_correction"] = c.bias_correction;
  j["grad_clip"] = c.grad_clip ? json(*c.grad_clip) : json(nullptr);
  j["momentum_form"] = name_of(detail::kFormNames, c.momentum_form);
  j[c.budget_unit == BudgetUnit::epochs ? "epochs" : "steps"] = c.budget;
  j["schedule"] = name_of(detail::kScheduleNames, c.schedule.kind);
  j["lr"] = c.schedule.gamma0;
  j["lr_min"] = c.schedule.gamma_min;
  j["t_max"] = c.schedule.t_max;
  j["t_warmup"] = c.schedule.t_warmup;
  j["t_decay"] = c.schedule.t_decay;
  j["batch_size"] = c.batch_size;
  j["sampler"] = name_of(detail::kSamplerNames, c.sampler);
  j["seed"] = c.seed;
  j["stream"] = c.stream;
  j["precision"] = name_of(detail::kPrecisionNames, c.precision);
  j["log_every"] = c.log_every;
  j["output"] = c.output;
  j["t_end"] = c.t_end;
  j["dt"] = c.dt;
  return j;
}

/// Re-parses `base` with `patch` merged on top, so the result is fully validated.
inline RunConfig with_overrides(const RunConfig& base, const json& patch) {
  json j = emit_config(base);
  if (patch.contains("epochs")) j.erase("steps");
  if (patch.contains("steps")) j.erase("epochs");
  for (const auto& [key, value] : patch.items()) j[key] = value;
  return parse_config_json(j);
}

/// INNAprop twin of an AdamW config: schedule, weight decay and budget are reused and
/// sigma takes the AdamW second-moment rate, unless `patch` says otherwise.
inline RunConfig paired_innaprop_from_adamw(const RunConfig& adamw, double alpha, double beta,
                                            const json& patch = json::object()) {
  if (adamw.optimizer != OptimizerKind::adamw) throw ConfigError("optimizer", "paired config must start from adamw");
  json j{{"optimizer", "innaprop"}, {"alpha", alpha}, {"beta", beta}, {"sigma", adamw.beta2}};
  for (const auto& [key, value] : patch.items()) j[key] = value;
  return with_overrides(adamw, j);
}

}  // namespace innaprop::harness
