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

// Task A: refreshes coordinate duality-gap scores in the gap memory from a
// frozen copy of the previous epoch's (alpha, v). Each score is computed by a
// single worker; parallelism comes only from several workers scoring
// different coordinates at once.

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hthc/data.hpp"
#include "hthc/glm.hpp"
#include "hthc/worker_team.hpp"

namespace hthc {

struct GapTaskConfig {
  std::size_t t_a = 1;
  std::uint64_t seed = 0;
};

/// Immutable copy of (alpha^t, v^t) taken at an epoch boundary. For Lasso
/// the residual w = v - y is materialized once; for SVM the 1/(lambda n^2)
/// factor is applied to the scalar product instead.
template <typename Real>
struct EpochSnapshot {
  std::vector<Real> alpha;
  std::vector<Real> v;
  std::vector<Real> w;  // empty for SVM
  std::uint64_t epoch = 0;

  std::span<const Real> gap_vector() const noexcept {
    return w.empty() ? std::span<const Real>(v) : std::span<const Real>(w);
  }
};

template <typename Real>
EpochSnapshot<Real> snapshot_for_epoch(const ModelState<Real>& state,
                                       const Problem& problem,
                                       std::span<const Real> targets);

/// <w^t, d_i> from a snapshot.
template <typename Real>
Real snapshot_dot(const Problem& problem, const EpochSnapshot<Real>& snap,
                  std::span<const Real> column) noexcept;

/// gap_i at the snapshot; zero-norm columns score 0.
template <typename Real>
Real score_coordinate(const Problem& problem, const DataMatrix<Real>& matrix,
                      const EpochSnapshot<Real>& snap, std::size_t i) noexcept;

/// Uniform coordinate stream of one worker in one epoch. Deterministic in
/// (seed, epoch, worker).
class CoordinateSampler {
 public:
  CoordinateSampler(std::size_t n, std::uint64_t seed, std::uint64_t epoch,
                    std::size_t worker);
  std::size_t next() { return dist_(rng_); }

 private:
  std::mt19937_64 rng_;
  std::uniform_int_distribution<std::size_t> dist_;
};

struct GapRunStats {
  std::uint64_t updates = 0;
  std::vector<std::uint64_t> per_worker;
  /// z-writes that landed after the stop signal was raised. Bounded by the
  /// worker count: each worker finishes at most its in-flight update.
  std::uint64_t writes_after_stop = 0;
  double stop_latency_s = 0;
};

/// Long-lived pool of t_a scoring workers. start() launches a run against a
/// snapshot; stop() raises the stop signal and returns once every worker is
/// quiescent, after first waiting until at least `min_updates` scores have
/// been written in this run. With a per-worker quota each worker stops on its
/// own after that many updates and finish() waits for them without
/// signalling.
template <typename Real>
class GapTask {
 public:
  GapTask(GapTaskConfig cfg, const DataMatrix<Real>& matrix,
          const Problem& problem);
  ~GapTask();

  GapTask(const GapTask&) = delete;
  GapTask& operator=(const GapTask&) = delete;

  std::size_t workers() const noexcept { return team_.size(); }

  void start(const EpochSnapshot<Real>& snap, GapMemory<Real>& z,
             std::uint64_t quota_per_worker = 0);
  GapRunStats stop(std::uint64_t min_updates = 0);
  GapRunStats finish();

 private:
  struct alignas(64) Counter {
    std::atomic<std::uint64_t> value{0};
  };

  void worker(std::size_t id);
  GapRunStats collect(std::uint64_t writes_at_stop, double latency);

  GapTaskConfig cfg_;
  const DataMatrix<Real>& matrix_;
  Problem problem_;
  WorkerTeam team_;
  std::vector<Counter> counts_;
  std::atomic<bool> stop_{false};
  const EpochSnapshot<Real>* snap_ = nullptr;
  GapMemory<Real>* z_ = nullptr;
  std::uint64_t quota_ = 0;
  std::uint64_t writes_at_start_ = 0;
  bool running_ = false;
};

/// Blocking single run of `cfg.t_a` workers until `stop` is observed (or
/// each worker has done `max_updates_per_worker` updates, when nonzero).
/// Returns the total number of z-writes.
template <typename Real>
std::uint64_t run_gap_sampling(const GapTaskConfig& cfg,
                               const DataMatrix<Real>& matrix,
                               const Problem& problem,
                               const EpochSnapshot<Real>& snap,
                               GapMemory<Real>& z, const std::atomic<bool>& stop,
                               std::uint64_t max_updates_per_worker = 0);

}  // namespace hthc
