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
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "innaprop/errors.hpp"
#include "innaprop/harness/config.hpp"
#include "innaprop/harness/runner.hpp"

namespace innaprop::harness {

namespace detail {

/// Runs job(i) for i in [0, n) on up to `threads` workers (0 = hardware concurrency).
/// Each index writes only its own output slot, so results do not depend on scheduling.
template <class Job>
void parallel_for(std::size_t n, unsigned threads, Job&& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) job(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& worker : pool) worker.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline void require_list(const std::vector<double>& values, const std::string& key) {
  if (values.empty()) throw ConfigError(key, "list must be non-empty");
  std::set<double> seen;
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError(key, "entries must be finite");
    if (!seen.insert(v).second) throw ConfigError(key, "duplicate entry " + format_number(v));
  }
}

}  // namespace detail

struct GridRow {
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t cell = 0;
  RunStatus status = RunStatus::ok;
  std::optional<double> short_train_loss;
  std::optional<double> short_test_metric;
  std::optional<double> final_train_loss;
  std::optional<double> final_test_metric;
  std::optional<double> best_test_metric;
};

struct GridResult {
  /// Sorted by (alpha, beta).
  std::vector<GridRow> rows;
  /// Per-cell run CSVs, indexed by cell.
  std::vector<std::string> cell_csv;

  [[nodiscard]] std::size_t diverged() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const GridRow& r) { return r.status != RunStatus::ok; }));
  }
};

/// Config of grid cell (i, j): alpha = alphas[i], beta = betas[j], stream = i * |betas| + j.
inline RunConfig grid_cell_config(const RunConfig& base, const std::vector<double>& alphas,
                                  const std::vector<double>& betas, std::size_t i, std::size_t j) {
  const std::size_t cell = i * betas.size() + j;
  return with_overrides(base, json{{"alpha", alphas[i]}, {"beta", betas[j]}, {"stream", cell}});
}

/// One run per (alpha, beta) cell. Every cell is validated before any compute;
/// a diverged cell is recorded and the grid completes.
inline GridResult grid_search(const RunConfig& base, const std::vector<double>& alphas,
                              const std::vector<double>& betas, unsigned threads = 0) {
  detail::require_list(alphas, "alphas");
  detail::require_list(betas, "betas");
  std::vector<RunConfig> cells;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    for (std::size_t j = 0; j < betas.size(); ++j) cells.push_back(grid_cell_config(base, alphas, betas, i, j));
  }
  GridResult result;
  result.rows.resize(cells.size());
  result.cell_csv.resize(cells.size());
  detail::parallel_for(cells.size(), threads, [&](std::size_t cell) {
    const RunResult r = run_experiment(cells[cell]);
    result.rows[cell] = {cells[cell].alpha,   cells[cell].beta,   cell,
                         r.status,            r.short_train_loss, r.short_test_metric,
                         r.final_train_loss,  r.final_test_metric, r.best_test_metric};
    result.cell_csv[cell] = render_csv(r);
  });
  std::sort(result.rows.begin(), result.rows.end(), [](const GridRow& a, const GridRow& b) {
    return a.alpha != b.alpha ? a.alpha < b.alpha : a.beta < b.beta;
  });
  return result;
}

inline std::string render_grid_csv(const GridResult& g) {
  std::string out =
      "alpha,beta,cell,status,short_train_loss,short_test_metric,final_train_loss,final_test_metric,"
      "best_test_metric\n";
  for (const auto& r : g.rows) {
    out += format_number(r.alpha) + ',' + format_number(r.beta) + ',' + std::to_string(r.cell) + ',' +
           to_string(r.status) + ',' + format_optional(r.short_train_loss) + ',' +
           format_optional(r.short_test_metric) + ',' + format_optional(r.final_train_loss) + ',' +
           format_optional(r.final_test_metric) + ',' + format_optional(r.best_test_metric) + '\n';
  }
  return out;
}

/// Writes grid.csv and, when `per_cell` is set, cells/cell_<index>.csv.
inline void write_grid(const GridResult& g, const std::filesystem::path& dir, bool per_cell) {
  write_text(dir / "grid.csv", render_grid_csv(g));
  if (!per_cell) return;
  for (std::size_t i = 0; i < g.cell_csv.size(); ++i) {
    write_text(dir / "cells" / ("cell_" + std::to_string(i) + ".csv"), g.cell_csv[i]);
  }
}

struct SweepRow {
  double lr = 0.0;
  RunStatus status = RunStatus::ok;
  std::optional<double> final_train_loss;
  std::optional<double> final_test_metric;
  std::optional<double> best_test_metric;
};

/// One run per initial learning rate, in the order given.
inline std::vector<SweepRow> lr_sweep(const RunConfig& base, const std::vector<double>& lrs,
                                      unsigned threads = 0) {
  detail::require_list(lrs, "lrs");
  std::vector<RunConfig> configs;
  for (double lr : lrs) configs.push_back(with_overrides(base, json{{"lr", lr}}));
  std::vector<SweepRow> rows(configs.size());
  detail::parallel_for(configs.size(), threads, [&](std::size_t i) {
    const RunResult r = run_experiment(configs[i]);
    rows[i] = {lrs[i], r.status, r.final_train_loss, r.final_test_metric, r.best_test_metric};
  });
  return rows;
}

/// Learning rate with the lowest final training loss among non-diverged runs.
inline std::optional<double> best_lr(const std::vector<SweepRow>& rows) {
  std::optional<double> best;
  double best_loss = 0.0;
  for (const auto& r : rows) {
    if (r.status != RunStatus::ok || !r.final_train_loss) continue;
    if (!best || *r.final_train_loss < best_loss) {
      best = r.lr;
      best_loss = *r.final_train_loss;
    }
  }
  return best;
}

inline std::string render_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "lr,status,final_train_loss,final_test_metric,best_test_metric\n";
  for (const auto& r : rows) {
    out += format_number(r.lr) + ',' + to_string(r.status) + ',' + format_optional(r.final_train_loss) + ',' +
           format_optional(r.final_test_metric) + ',' + format_optional(r.best_test_metric) + '\n';
  }
  return out;
}

}  // namespace innaprop::harness
