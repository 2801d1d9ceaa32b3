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

#include "hthc/coordinator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <type_traits>

#include "hthc/errors.hpp"

namespace hthc {

std::size_t TrainConfig::resolve_batch_size(std::size_t n) const {
  if (batch_size > 0) return std::min(batch_size, n);
  const auto m = static_cast<std::size_t>(
      std::ceil(batch_frac * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(m, 1, n);
}

void TrainConfig::validate(std::size_t n) const {
  if (n == 0) throw ConfigError("training needs at least one coordinate");
  if (batch_size > n)
    throw ConfigError("batch size " + std::to_string(batch_size) +
                      " exceeds n = " + std::to_string(n));
  if (batch_size == 0 && !(batch_frac > 0 && batch_frac <= 1))
    throw ConfigError("batch fraction must be in (0, 1]");
  if (!(r_tilde > 0 && r_tilde <= 1)) throw ConfigError("r_tilde must be in (0, 1]");
  if (!(tol > 0)) throw ConfigError("tolerance must be > 0");
  if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (!(timeout_s > 0)) throw ConfigError("timeout must be > 0");
  if (gap_every == 0) throw ConfigError("gap_every must be >= 1");
}

std::string_view to_string(TrainStatus status) noexcept {
  switch (status) {
    case TrainStatus::converged:
      return "converged";
    case TrainStatus::epoch_limit:
      return "epoch_limit";
    case TrainStatus::timeout:
      return "timeout";
  }
  return "unknown";
}

template <typename Real>
std::vector<std::size_t> select_top_m(std::span<const Real> z, std::size_t m) {
  const std::size_t n = z.size();
  m = std::min(m, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    return z[a] > z[b] || (z[a] == z[b] && a < b);
  };
  if (m < n) std::nth_element(idx.begin(), idx.begin() + m, idx.end(), before);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

template <typename Real>
double gap_with_v(const DataMatrix<Real>& matrix, std::span<const Real> alpha,
                  const std::vector<double>& v, const Problem& problem,
                  std::span<const Real> targets) {
  const std::size_t d = matrix.rows();
  std::vector<double> w(d);
  if (problem.kind == ModelKind::lasso) {
    for (std::size_t r = 0; r < d; ++r) w[r] = v[r] - double(targets[r]);
  } else {
    const double inv = 1.0 / problem.svm_scale();
    for (std::size_t r = 0; r < d; ++r) w[r] = v[r] * inv;
  }
  double total = 0;
  for (std::size_t i = 0; i < matrix.cols(); ++i) {
    auto col = matrix.column(i);
    double s = 0;
    for (std::size_t r = 0; r < d; ++r) s += double(col[r]) * w[r];
    total += gap_i<double>(problem, s, double(alpha[i]));
  }
  return total;
}

}  // namespace

template <typename Real>
double full_duality_gap(const DataMatrix<Real>& matrix,
                        std::span<const Real> alpha, const Problem& problem,
                        std::span<const Real> targets) {
  return gap_with_v(matrix, alpha, matrix.multiply(alpha), problem, targets);
}

template <typename Real>
double duality_gap_from_v(const DataMatrix<Real>& matrix,
                          std::span<const Real> alpha, std::span<const Real> v,
                          const Problem& problem,
                          std::span<const Real> targets) {
  return gap_with_v(matrix, alpha, std::vector<double>(v.begin(), v.end()),
                    problem, targets);
}

template <typename Real>
double consistency_error(const DataMatrix<Real>& matrix,
                         std::span<const Real> alpha, std::span<const Real> v) {
  const auto exact = matrix.multiply(alpha);
  double worst = 0;
  for (std::size_t r = 0; r < exact.size(); ++r)
    worst = std::max(worst, std::abs(double(v[r]) - exact[r]));
  return worst;
}

template <typename Real>
double consistency_bound(const DataMatrix<Real>& matrix,
                         std::span<const Real> alpha, std::span<const Real> v) {
  double max_norm = 0;
  for (Real q : matrix.col_sq_norms())
    max_norm = std::max(max_norm, std::sqrt(double(q)));
  double alpha_inf = 0;
  for (Real a : alpha) alpha_inf = std::max(alpha_inf, std::abs(double(a)));
  double scale = max_norm * alpha_inf;
  if constexpr (std::is_same_v<Real, float>) {
    return 1e-3 * scale;
  } else {
    double v_inf = 0;
    for (Real x : v) v_inf = std::max(v_inf, std::abs(double(x)));
    return 1e-8 * std::max({scale, v_inf, 1e-300});
  }
}

void attach_suboptimality(std::vector<TraceRow>& trace, double f_star) {
  const double slack = 1e-12 * std::max(1.0, std::abs(f_star));
  for (const auto& row : trace)
    if (std::isfinite(row.objective) && row.objective < f_star - slack)
      throw ConfigError("reference optimum lies above an observed objective "
                        "(epoch " + std::to_string(row.epoch) + ")");
  for (auto& row : trace)
    if (std::isfinite(row.objective))
      row.suboptimality = std::max(0.0, row.objective - f_star);
}

namespace detail {

template <typename Real>
std::optional<TrainStatus> EpochCloser<Real>::close(
    TraceRow& row, ModelState<Real>& state, double elapsed_s,
    bool last_epoch, TrainResult<Real>& result) const {
  const bool timed_out = elapsed_s >= cfg.timeout_s;
  const bool evaluate =
      (row.epoch + 1) % cfg.gap_every == 0 || last_epoch || timed_out;
  if (cfg.track_consistency) {
    row.v_drift = consistency_error<Real>(matrix, state.alpha, state.v);
    row.v_drift_bound = consistency_bound<Real>(matrix, state.alpha, state.v);
  }
  if (evaluate) {
    const auto fresh_v = matrix.multiply(state.alpha);
    row.duality_gap =
        gap_with_v(matrix, std::span<const Real>(state.alpha), fresh_v,
                   problem, targets);
    const std::vector<double> alpha64(state.alpha.begin(), state.alpha.end());
    const std::vector<double> targets64(targets.begin(), targets.end());
    row.objective =
        primal_objective<double>(problem, alpha64, fresh_v, targets64);
    if (cfg.f_star)
      row.suboptimality = std::max(0.0, row.objective - *cfg.f_star);
    result.final_gap = row.duality_gap;
    result.final_objective = row.objective;
    if (cfg.resync_v)
      for (std::size_t r = 0; r < fresh_v.size(); ++r)
        state.v[r] = static_cast<Real>(fresh_v[r]);
  }
  if (evaluate && row.duality_gap <= cfg.tol) return TrainStatus::converged;
  if (timed_out) return TrainStatus::timeout;
  if (last_epoch) return TrainStatus::epoch_limit;
  return std::nullopt;
}

}  // namespace detail

template <typename Real>
TrainResult<Real> train(const DataMatrix<Real>& matrix,
                        std::span<const Real> targets, const Problem& problem,
                        const TrainConfig& cfg,
                        const EpochObserver<Real>& observer) {
  const std::size_t n = matrix.cols();
  const std::size_t d = matrix.rows();
  cfg.validate(n);
  if (problem.n != n) throw ConfigError("problem size does not match matrix");
  if (problem.kind == ModelKind::lasso && targets.size() != d)
    throw ConfigError("Lasso needs one target per matrix row");

  const std::size_t m = cfg.resolve_batch_size(n);
  const auto offsets = column_offsets<Real>(problem, matrix, targets);

  SolverConfig solver_cfg = cfg.solver;
  solver_cfg.seed = cfg.seed;
  GapTaskConfig gap_cfg = cfg.gap;
  gap_cfg.seed = cfg.seed ^ 0xC2B2AE3D27D4EB4Full;
  GapTask<Real> task_a(gap_cfg, matrix, problem);
  SolverTask<Real> task_b(solver_cfg);
  const std::uint64_t quota_per_worker =
      gap_cfg.t_a == 0 ? 0 : (cfg.a_quota + gap_cfg.t_a - 1) / gap_cfg.t_a;
  const bool lockstep = quota_per_worker > 0;

  ModelState<Real> state(n, d);
  GapMemory<Real> z(n);
  detail::EpochCloser<Real> closer{matrix, targets, problem, cfg};
  TrainResult<Real> result;
  std::vector<bool> in_batch(n, false);

  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t t = 0; t < cfg.max_epochs; ++t) {
    state.epoch = t;
    const auto batch = select_top_m<Real>(z.view(), m);
    std::size_t churn = 0;
    std::vector<bool> next_in_batch(n, false);
    for (std::size_t i : batch) {
      next_in_batch[i] = true;
      if (!in_batch[i]) ++churn;
    }
    in_batch.swap(next_in_batch);

    const auto buffer = stage_batch<Real>(matrix, batch, offsets);
    const auto snap = snapshot_for_epoch<Real>(state, problem, targets);

    z.begin_epoch();
    task_a.start(snap, z, quota_per_worker);
    EpochStats b_stats;
    try {
      b_stats = task_b.run_epoch(buffer.view(), state, problem);
    } catch (const DivergenceError& e) {
      task_a.stop();
      throw DivergenceError(std::string(e.what()) + " at epoch " +
                            std::to_string(t) + " (model " +
                            std::string(to_string(problem.kind)) +
                            ", m = " + std::to_string(m) + ")");
    }
    const GapRunStats a_stats = lockstep ? task_a.finish() : task_a.stop(1);
    const std::uint64_t z_generation = z.writes();

    TraceRow row;
    row.epoch = t;
    row.updates_a = a_stats.updates;
    row.coverage_a = static_cast<double>(a_stats.updates) / static_cast<double>(n);
    row.updates_b = b_stats.updates;
    row.mode = "hthc";
    row.sync = std::string(to_string(cfg.solver.mode));
    row.batch_churn = churn;
    row.a_late_writes = a_stats.writes_after_stop;

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    row.wall_s = elapsed;
    const auto stop =
        closer.close(row, state, elapsed, t + 1 == cfg.max_epochs, result);
    if (z.writes() != z_generation)
      throw std::logic_error("gap memory written during an epoch boundary");
    result.trace.push_back(row);
    if (observer) observer(row, state, b_stats);
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

std::string trace_csv_header() {
  return "epoch,wall_s,duality_gap,objective,suboptimality,updates_A,"
         "coverage_A,updates_B,mode,sync,batch_churn,v_drift,v_drift_bound,"
         "a_late_writes";
}

namespace {

void put_double(std::ostream& out, double x, int digits = 17) {
  if (std::isnan(x)) return;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  out << buf;
}

}  // namespace

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace,
                     bool header) {
  if (header) out << trace_csv_header() << '\n';
  for (const auto& r : trace) {
    out << r.epoch << ',';
    put_double(out, r.wall_s, 9);
    out << ',';
    put_double(out, r.duality_gap);
    out << ',';
    put_double(out, r.objective);
    out << ',';
    put_double(out, r.suboptimality);
    out << ',' << r.updates_a << ',';
    put_double(out, r.coverage_a);
    out << ',' << r.updates_b << ',' << r.mode << ',' << r.sync << ','
        << r.batch_churn << ',';
    put_double(out, r.v_drift);
    out << ',';
    put_double(out, r.v_drift_bound);
    out << ',' << r.a_late_writes << '\n';
  }
}

#define HTHC_INSTANTIATE(Real)                                                 \
  template std::vector<std::size_t> select_top_m<Real>(std::span<const Real>,  \
                                                       std::size_t);           \
  template double full_duality_gap<Real>(const DataMatrix<Real>&,              \
                                         std::span<const Real>,                \
                                         const Problem&,                       \
                                         std::span<const Real>);               \
  template double duality_gap_from_v<Real>(                                    \
      const DataMatrix<Real>&, std::span<const Real>, std::span<const Real>,   \
      const Problem&, std::span<const Real>);                                  \
  template double consistency_error<Real>(                                     \
      const DataMatrix<Real>&, std::span<const Real>, std::span<const Real>);  \
  template double consistency_bound<Real>(                                     \
      const DataMatrix<Real>&, std::span<const Real>, std::span<const Real>);  \
  template struct detail::EpochCloser<Real>;                                   \
  template TrainResult<Real> train<Real>(                                      \
      const DataMatrix<Real>&, std::span<const Real>, const Problem&,          \
      const TrainConfig&, const EpochObserver<Real>&);

HTHC_INSTANTIATE(float)
HTHC_INSTANTIATE(double)
#undef HTHC_INSTANTIATE

}  // namespace hthc
