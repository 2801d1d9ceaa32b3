/**
 * Copyright 2026 The hthc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hthc/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "hthc/errors.hpp"
#include "hthc/solver_task.hpp"

namespace hthc {

template <typename Real>
TrainResult<Real> st_train(const DataMatrix<Real>& matrix,
                           std::span<const Real> targets, const Problem& problem,
                           const TrainConfig& cfg,
                           const EpochObserver<Real>& observer) {
  const std::size_t n = matrix.cols();
  const std::size_t d = matrix.rows();
  if (n == 0) throw ConfigError("training needs at least one coordinate");
  if (!(cfg.tol > 0)) throw ConfigError("tolerance must be > 0");
  if (cfg.max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (!(cfg.timeout_s > 0)) throw ConfigError("timeout must be > 0");
  if (cfg.gap_every == 0) throw ConfigError("gap_every must be >= 1");
  if (problem.n != n) throw ConfigError("problem size does not match matrix");
  if (problem.kind == ModelKind::lasso && targets.size() != d)
    throw ConfigError("Lasso needs one target per matrix row");

  const auto offsets = column_offsets<Real>(problem, matrix, targets);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto view = full_view<Real>(matrix, all, offsets);

  SolverConfig solver_cfg = cfg.solver;
  solver_cfg.seed = cfg.seed;
  SolverTask<Real> task(solver_cfg);
  ModelState<Real> state(n, d);
  detail::EpochCloser<Real> closer{matrix, targets, problem, cfg};
  TrainResult<Real> result;

  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t t = 0; t < cfg.max_epochs; ++t) {
    state.epoch = t;
    EpochStats stats;
    try {
      stats = task.run_epoch(view, state, problem);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " at epoch " +
                            std::to_string(t) + " (st)");
    }
    TraceRow row;
    row.epoch = t;
    row.updates_b = stats.updates;
    row.mode = "st";
    row.sync = std::string(to_string(cfg.solver.mode));
    row.batch_churn = t == 0 ? n : 0;
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    row.wall_s = elapsed;
    const auto stop =
        closer.close(row, state, elapsed, t + 1 == cfg.max_epochs, result);
    result.trace.push_back(row);
    if (observer) observer(row, state, stats);
    if (stop) {
      result.status = *stop;
      break;
    }
  }
  result.epochs = result.trace.size();
  result.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  result.alpha = std::move(state.alpha);
  result.v = std::move(state.v);
  return result;
}

template <typename Real>
DataMatrix<double> to_double(const DataMatrix<Real>& m) {
  const auto vals = m.values();
  return DataMatrix<double>(m.rows(), m.cols(),
                            std::vector<double>(vals.begin(), vals.end()));
}

namespace {

double gap_of(const DataMatrix<double>& m, const std::vector<double>& alpha,
              const std::vector<double>& v, const Problem& p,
              const std::vector<double>& y) {
  const auto w = w_from_v<double>(p, v, y);
  const auto dots = m.multiply_transposed(w);
  double total = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    total += gap_i<double>(p, dots[i], alpha[i]);
  return total;
}

}  // namespace

template <typename Real>
ReferenceResult reference_scd(const DataMatrix<Real>& matrix,
                              std::span<const Real> targets,
                              const Problem& problem, double tol,
                              std::size_t max_passes) {
  const DataMatrix<double> m = to_double(matrix);
  const std::vector<double> y(targets.begin(), targets.end());
  const std::size_t n = m.cols();
  const std::size_t d = m.rows();
  if (n == 0) throw ConfigError("reference solver needs n >= 1");
  if (problem.n != n) throw ConfigError("problem size does not match matrix");
  if (problem.kind == ModelKind::lasso && y.size() != d)
    throw ConfigError("Lasso needs one target per matrix row");

  std::vector<double> alpha(n, 0.0), v(d, 0.0);
  const double inv_scale =
      problem.kind == ModelKind::svm ? 1.0 / problem.svm_scale() : 1.0;

  ReferenceResult best;
  best.alpha = alpha;
  best.objective = primal_objective<double>(problem, alpha, v, y);
  best.gap = gap_of(m, alpha, v, problem, y);
  if (best.gap <= tol) {
    best.converged = true;
    return best;
  }

  for (std::size_t pass = 1; pass <= max_passes; ++pass) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = m.column(i);
      double raw = 0;
      for (std::size_t r = 0; r < d; ++r) raw += col[r] * v[r];
      double dot;
      if (problem.kind == ModelKind::lasso) {
        double off = 0;
        for (std::size_t r = 0; r < d; ++r) off += col[r] * y[r];
        dot = raw - off;
      } else {
        dot = raw * inv_scale;
      }
      const auto step = update_i<double>(problem, dot, alpha[i], m.col_sq_norm(i));
      if (step.delta == 0) continue;
      alpha[i] += step.delta;
      for (std::size_t r = 0; r < d; ++r) v[r] += step.delta * col[r];
    }
    if (pass % 100 == 0) v = m.multiply(alpha);

    const double gap = gap_of(m, alpha, v, problem, y);
    const double obj = primal_objective<double>(problem, alpha, v, y);
    if (obj <= best.objective || gap <= tol) {
      best.alpha = alpha;
      best.objective = obj;
      best.gap = gap;
    }
    best.passes = pass;
    if (gap <= tol) {
      best.alpha = alpha;
      best.objective = obj;
      best.gap = gap;
      best.converged = true;
      return best;
    }
  }
  return best;
}

#define HTHC_INSTANTIATE(Real)                                                \
  template TrainResult<Real> st_train<Real>(                                  \
      const DataMatrix<Real>&, std::span<const Real>, const Problem&,         \
      const TrainConfig&, const EpochObserver<Real>&);                        \
  template ReferenceResult reference_scd<Real>(                               \
      const DataMatrix<Real>&, std::span<const Real>, const Problem&, double, \
      std::size_t);                                                           \
  template DataMatrix<double> to_double<Real>(const DataMatrix<Real>&);

HTHC_INSTANTIATE(float)
HTHC_INSTANTIATE(double)
#undef HTHC_INSTANTIATE

}  // namespace hthc
