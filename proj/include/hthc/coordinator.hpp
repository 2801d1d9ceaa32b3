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

// Epoch loop driving the two heterogeneous tasks:
//
//   z <- 0, alpha <- 0, v <- 0
//   repeat
//     P <- the m coordinates with the largest z
//     freeze (alpha^t, v^t)
//     concurrently:  A scores random coordinates of the frozen state into z
//                    B runs asynchronous coordinate descent over P
//     when B is done, stop A and wait until it is quiescent
//     certify with the full duality gap
//
// The coordinator is the only actor between the two concurrent phases.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hthc/data.hpp"
#include "hthc/gap_task.hpp"
#include "hthc/glm.hpp"
#include "hthc/solver_task.hpp"

namespace hthc {

inline constexpr double kDefaultTolerance = 1e-5;
inline constexpr double kDefaultRTilde = 0.15;

struct TrainConfig {
  /// Coordinates per epoch. 0 means derive from batch_frac.
  std::size_t batch_size = 0;
  double batch_frac = 0.15;
  double r_tilde = kDefaultRTilde;
  double tol = kDefaultTolerance;
  std::size_t max_epochs = 1000;
  double timeout_s = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  /// Evaluate the full duality gap every `gap_every` epochs.
  std::size_t gap_every = 1;
  /// Per-epoch number of task-A scores, split evenly over its workers. When
  /// nonzero the coordinator waits for A to finish its quota instead of
  /// stopping it when B completes, which makes runs timing-independent.
  std::uint64_t a_quota = 0;
  /// Record |v - D alpha|_inf per epoch.
  bool track_consistency = false;
  /// Overwrite v with the freshly computed D alpha whenever the full gap is
  /// evaluated, so rounding drift in v does not accumulate across epochs.
  bool resync_v = true;
  /// Reference optimum for per-epoch suboptimality, if known.
  std::optional<double> f_star;
  SolverConfig solver;
  GapTaskConfig gap;

  std::size_t resolve_batch_size(std::size_t n) const;
  void validate(std::size_t n) const;
};

enum class TrainStatus { converged, epoch_limit, timeout };

std::string_view to_string(TrainStatus status) noexcept;

struct TraceRow {
  std::size_t epoch = 0;
  double wall_s = 0;
  /// NaN on epochs where the gap was not evaluated.
  double duality_gap = std::numeric_limits<double>::quiet_NaN();
  double objective = std::numeric_limits<double>::quiet_NaN();
  double suboptimality = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t updates_a = 0;
  double coverage_a = 0;
  std::uint64_t updates_b = 0;
  std::string mode;
  std::string sync;
  /// Coordinates entering the batch compared to the previous epoch.
  std::size_t batch_churn = 0;
  /// |v - D alpha|_inf, NaN unless tracked.
  double v_drift = std::numeric_limits<double>::quiet_NaN();
  double v_drift_bound = std::numeric_limits<double>::quiet_NaN();
  /// A-writes that landed after B finished and the stop was raised.
  std::uint64_t a_late_writes = 0;
};

template <typename Real>
struct TrainResult {
  std::vector<Real> alpha;
  std::vector<Real> v;
  std::vector<TraceRow> trace;
  TrainStatus status = TrainStatus::epoch_limit;
  double final_gap = std::numeric_limits<double>::quiet_NaN();
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  double wall_s = 0;
  std::size_t epochs = 0;
  bool converged() const noexcept { return status == TrainStatus::converged; }
};

/// Hook invoked at every epoch boundary while both tasks are quiescent.
template <typename Real>
using EpochObserver =
    std::function<void(const TraceRow&, const ModelState<Real>&,
                       const EpochStats&)>;

/// The m indices with the largest z, returned in ascending index order. Ties
/// prefer the lower index, so min over P >= max over the rest and the result
/// is deterministic.
template <typename Real>
std::vector<std::size_t> select_top_m(std::span<const Real> z, std::size_t m);

/// sum_i gap_i with w computed from a fresh v = D alpha (double accumulation).
template <typename Real>
double full_duality_gap(const DataMatrix<Real>& matrix,
                        std::span<const Real> alpha, const Problem& problem,
                        std::span<const Real> targets);

/// Same, but with w computed from the maintained v (as the solver sees it).
template <typename Real>
double duality_gap_from_v(const DataMatrix<Real>& matrix,
                          std::span<const Real> alpha, std::span<const Real> v,
                          const Problem& problem, std::span<const Real> targets);

/// |v - D alpha|_inf.
template <typename Real>
double consistency_error(const DataMatrix<Real>& matrix,
                         std::span<const Real> alpha, std::span<const Real> v);

/// Single-precision consistency bound 1e-3 max_i |d_i| |alpha|_inf, or the
/// double-precision bound 1e-8 max(max_i |d_i| |alpha|_inf, |v|_inf).
template <typename Real>
double consistency_bound(const DataMatrix<Real>& matrix,
                         std::span<const Real> alpha, std::span<const Real> v);

/// Fills TraceRow::suboptimality from TraceRow::objective. Throws if some
/// recorded objective lies below f_star (a bad reference).
void attach_suboptimality(std::vector<TraceRow>& trace, double f_star);

template <typename Real>
TrainResult<Real> train(const DataMatrix<Real>& matrix,
                        std::span<const Real> targets, const Problem& problem,
                        const TrainConfig& cfg,
                        const EpochObserver<Real>& observer = {});

/// Trace CSV with a fixed header.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace,
                     bool header = true);
std::string trace_csv_header();

namespace detail {

/// Shared end-of-epoch bookkeeping for the coordinator and the ST baseline.
template <typename Real>
struct EpochCloser {
  const DataMatrix<Real>& matrix;
  std::span<const Real> targets;
  const Problem& problem;
  const TrainConfig& cfg;

  /// Fills gap/objective/drift on `row`, optionally resynchronizes v, and
  /// decides whether to stop.
  std::optional<TrainStatus> close(TraceRow& row, ModelState<Real>& state,
                                   double elapsed_s, bool last_epoch,
                                   TrainResult<Real>& result) const;
};

}  // namespace detail

}  // namespace hthc
