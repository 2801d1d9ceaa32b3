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

#include "hthc/gap_task.hpp"

#include <chrono>
#include <stdexcept>
#include <thread>

#include "hthc/errors.hpp"
#include "hthc/kernels.hpp"

namespace hthc {

template <typename Real>
EpochSnapshot<Real> snapshot_for_epoch(const ModelState<Real>& state,
                                       const Problem& problem,
                                       std::span<const Real> targets) {
  if (state.alpha.empty() || state.v.empty())
    throw ConfigError("snapshot of an empty model");
  EpochSnapshot<Real> snap;
  snap.alpha = state.alpha;
  snap.v = state.v;
  snap.epoch = state.epoch;
  if (problem.kind == ModelKind::lasso)
    snap.w = w_from_v<Real>(problem, state.v, targets);
  return snap;
}

template <typename Real>
Real snapshot_dot(const Problem& problem, const EpochSnapshot<Real>& snap,
                  std::span<const Real> column) noexcept {
  auto source = snap.gap_vector();
  const Real raw = dot(column.data(), source.data(), column.size());
  if (problem.kind == ModelKind::lasso) return raw;
  return raw / static_cast<Real>(problem.svm_scale());
}

template <typename Real>
Real score_coordinate(const Problem& problem, const DataMatrix<Real>& matrix,
                      const EpochSnapshot<Real>& snap, std::size_t i) noexcept {
  if (!(matrix.col_sq_norm(i) > Real{0})) return Real{0};
  const Real d = snapshot_dot(problem, snap, matrix.column(i));
  return gap_i(problem, d, snap.alpha[i]);
}

CoordinateSampler::CoordinateSampler(std::size_t n, std::uint64_t seed,
                                     std::uint64_t epoch, std::size_t worker)
    : dist_(0, n - 1) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch),
                    static_cast<std::uint32_t>(epoch >> 32),
                    static_cast<std::uint32_t>(worker), 0xA5u};
  rng_.seed(seq);
}

namespace {

template <typename Real>
void sampling_loop(const Problem& problem, const DataMatrix<Real>& matrix,
                   const EpochSnapshot<Real>& snap, GapMemory<Real>& z,
                   const std::atomic<bool>& stop, CoordinateSampler& sampler,
                   std::uint64_t quota, std::atomic<std::uint64_t>& counter) {
  std::uint64_t done = 0;
  while (!stop.load(std::memory_order_acquire) && (quota == 0 || done < quota)) {
    const std::size_t i = sampler.next();
    z.store(i, score_coordinate(problem, matrix, snap, i));
    counter.store(++done, std::memory_order_relaxed);
  }
}

}  // namespace

template <typename Real>
GapTask<Real>::GapTask(GapTaskConfig cfg, const DataMatrix<Real>& matrix,
                       const Problem& problem)
    : cfg_(cfg),
      matrix_(matrix),
      problem_(problem),
      team_(cfg.t_a),
      counts_(cfg.t_a) {}

template <typename Real>
GapTask<Real>::~GapTask() {
  if (!running_) return;
  stop_.store(true, std::memory_order_release);
  try {
    team_.wait();
  } catch (...) {
  }
}

template <typename Real>
void GapTask<Real>::start(const EpochSnapshot<Real>& snap, GapMemory<Real>& z,
                          std::uint64_t quota_per_worker) {
  if (running_) throw std::logic_error("GapTask: already running");
  if (z.size() != matrix_.cols())
    throw ConfigError("gap memory size does not match the matrix");
  snap_ = &snap;
  z_ = &z;
  quota_ = quota_per_worker;
  for (auto& c : counts_) c.value.store(0, std::memory_order_relaxed);
  stop_.store(false, std::memory_order_release);
  writes_at_start_ = z.writes();
  running_ = true;
  team_.launch([this](std::size_t id) { worker(id); });
}

template <typename Real>
void GapTask<Real>::worker(std::size_t id) {
  CoordinateSampler sampler(matrix_.cols(), cfg_.seed, snap_->epoch, id);
  sampling_loop(problem_, matrix_, *snap_, *z_, stop_, sampler, quota_,
                counts_[id].value);
}

template <typename Real>
GapRunStats GapTask<Real>::stop(std::uint64_t min_updates) {
  if (!running_) return {};
  if (!counts_.empty()) {
    auto total = [this] {
      std::uint64_t s = 0;
      for (auto& c : counts_) s += c.value.load(std::memory_order_relaxed);
      return s;
    };
    while (total() < min_updates) std::this_thread::yield();
  }
  const auto t0 = std::chrono::steady_clock::now();
  stop_.store(true, std::memory_order_release);
  const std::uint64_t at_stop = z_->writes();
  team_.wait();
  const double latency =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return collect(at_stop, latency);
}

template <typename Real>
GapRunStats GapTask<Real>::finish() {
  if (!running_) return {};
  team_.wait();
  return collect(z_->writes(), 0.0);
}

template <typename Real>
GapRunStats GapTask<Real>::collect(std::uint64_t writes_at_stop,
                                   double latency) {
  running_ = false;
  GapRunStats stats;
  stats.per_worker.reserve(counts_.size());
  for (auto& c : counts_) {
    const auto v = c.value.load(std::memory_order_relaxed);
    stats.per_worker.push_back(v);
    stats.updates += v;
  }
  stats.writes_after_stop = z_->writes() - writes_at_stop;
  stats.stop_latency_s = latency;
  return stats;
}

template <typename Real>
std::uint64_t run_gap_sampling(const GapTaskConfig& cfg,
                               const DataMatrix<Real>& matrix,
                               const Problem& problem,
                               const EpochSnapshot<Real>& snap,
                               GapMemory<Real>& z, const std::atomic<bool>& stop,
                               std::uint64_t max_updates_per_worker) {
  if (z.size() != matrix.cols())
    throw ConfigError("gap memory size does not match the matrix");
  std::vector<std::atomic<std::uint64_t>> counts(cfg.t_a);
  WorkerTeam team(cfg.t_a);
  team.run([&](std::size_t id) {
    CoordinateSampler sampler(matrix.cols(), cfg.seed, snap.epoch, id);
    sampling_loop(problem, matrix, snap, z, stop, sampler,
                  max_updates_per_worker, counts[id]);
  });
  std::uint64_t total = 0;
  for (auto& c : counts) total += c.load();
  return total;
}

#define HTHC_INSTANTIATE(Real)                                                 \
  template EpochSnapshot<Real> snapshot_for_epoch<Real>(                       \
      const ModelState<Real>&, const Problem&, std::span<const Real>);         \
  template Real snapshot_dot<Real>(const Problem&, const EpochSnapshot<Real>&, \
                                   std::span<const Real>) noexcept;            \
  template Real score_coordinate<Real>(const Problem&, const DataMatrix<Real>&, \
                                       const EpochSnapshot<Real>&,             \
                                       std::size_t) noexcept;                  \
  template class GapTask<Real>;                                                \
  template std::uint64_t run_gap_sampling<Real>(                               \
      const GapTaskConfig&, const DataMatrix<Real>&, const Problem&,           \
      const EpochSnapshot<Real>&, GapMemory<Real>&, const std::atomic<bool>&,  \
      std::uint64_t);

HTHC_INSTANTIATE(float)
HTHC_INSTANTIATE(double)
#undef HTHC_INSTANTIATE

}  // namespace hthc
