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

#include "hthc/solver_task.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "hthc/errors.hpp"

namespace hthc {

template <typename Real>
BatchView<Real> full_view(const DataMatrix<Real>& matrix,
                          std::span<const std::size_t> all_indices,
                          std::span<const Real> offsets) {
  if (all_indices.size() != matrix.cols() || offsets.size() != matrix.cols())
    throw ConfigError("full_view: index/offset length must equal n");
  return {all_indices, matrix.values().data(), matrix.rows(),
          matrix.col_sq_norms(), offsets};
}

template <typename Real>
BatchBuffer<Real> BatchBuffer<Real>::stage(const DataMatrix<Real>& matrix,
                                           std::span<const std::size_t> indices,
                                           std::span<const Real> offsets) {
  const std::size_t n = matrix.cols();
  if (offsets.size() != n)
    throw ConfigError("stage_batch: offsets length must equal n");
  std::vector<bool> seen(n, false);
  for (std::size_t i : indices) {
    if (i >= n)
      throw ConfigError("stage_batch: index " + std::to_string(i) +
                        " out of range (n = " + std::to_string(n) + ")");
    if (seen[i])
      throw ConfigError("stage_batch: duplicate index " + std::to_string(i));
    seen[i] = true;
  }
  BatchBuffer buf;
  buf.rows_ = matrix.rows();
  buf.indices_.assign(indices.begin(), indices.end());
  buf.columns_.resize(indices.size() * buf.rows_);
  buf.sq_norms_.reserve(indices.size());
  buf.offsets_.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    auto col = matrix.column(indices[j]);
    std::copy(col.begin(), col.end(), buf.columns_.begin() + j * buf.rows_);
    buf.sq_norms_.push_back(matrix.col_sq_norm(indices[j]));
    buf.offsets_.push_back(offsets[indices[j]]);
  }
  return buf;
}

template <typename Real>
struct SolverTask<Real>::Lane {
  explicit Lane(std::size_t width) : partials(width), sync(width) {}

  std::size_t pos = 0;
  Real delta{0};
  std::vector<Real> partials;
  std::barrier<> sync;
};

template <typename Real>
struct SolverTask<Real>::EpochContext {
  const BatchView<Real>* batch;
  ModelState<Real>* state;
  Problem problem;
  StripedVector<Real> v;
  std::vector<std::size_t> order;
  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> abort{false};
  std::atomic<std::size_t> degenerate{0};
  std::atomic<std::size_t> updates{0};
};

template <typename Real>
SolverTask<Real>::SolverTask(SolverConfig cfg)
    : cfg_(cfg), team_(cfg.t_b * cfg.v_b) {
  if (cfg.t_b == 0 || cfg.v_b == 0)
    throw ConfigError("solver needs t_b >= 1 and v_b >= 1");
  if (cfg.stripe_len == 0) throw ConfigError("stripe length must be >= 1");
  for (std::size_t l = 0; l < cfg.t_b; ++l)
    lanes_.push_back(std::make_unique<Lane>(cfg.v_b));
}

template <typename Real>
SolverTask<Real>::~SolverTask() = default;

template <typename Real>
EpochStats SolverTask<Real>::run_epoch(const BatchView<Real>& batch,
                                       ModelState<Real>& state,
                                       const Problem& problem) {
  if (batch.rows != state.v.size())
    throw ConfigError("batch row count does not match v");
  for (std::size_t i : batch.indices)
    if (i >= state.alpha.size()) throw ConfigError("batch index out of range");

  const auto t0 = std::chrono::steady_clock::now();
  if (cfg_.instrument) {
    if (writes_len_ != state.alpha.size()) {
      writes_len_ = state.alpha.size();
      writes_ = std::make_unique<std::atomic<std::uint32_t>[]>(writes_len_);
    }
    for (std::size_t i = 0; i < writes_len_; ++i)
      writes_[i].store(0, std::memory_order_relaxed);
  }

  EpochContext ctx{&batch, &state, problem,
                   StripedVector<Real>(state.v, cfg_.stripe_len), {}};
  ctx.order.resize(batch.size());
  std::iota(ctx.order.begin(), ctx.order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg_.seed ^ (0x9E3779B97F4A7C15ull * (state.epoch + 1)));
  std::shuffle(ctx.order.begin(), ctx.order.end(), rng);

  if (!ctx.order.empty())
    team_.run([this, &ctx](std::size_t id) { worker(id, ctx); });

  if (ctx.abort.load())
    throw DivergenceError(
        "non-finite coordinate update with T_B = " + std::to_string(cfg_.t_b) +
        " (V_B = " + std::to_string(cfg_.v_b) +
        "); reduce the number of parallel updates");

  EpochStats stats;
  stats.updates = ctx.updates.load();
  stats.degenerate = ctx.degenerate.load();
  if (cfg_.instrument) {
    stats.writes_per_coordinate.resize(writes_len_);
    for (std::size_t i = 0; i < writes_len_; ++i)
      stats.writes_per_coordinate[i] = writes_[i].load(std::memory_order_relaxed);
  }
  stats.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return stats;
}

template <typename Real>
void SolverTask<Real>::worker(std::size_t id, EpochContext& ctx) {
  const std::size_t width = cfg_.v_b;
  Lane& lane = *lanes_[id / width];
  const std::size_t k = id % width;
  const bool leader = k == 0;
  const BatchView<Real>& batch = *ctx.batch;
  const std::size_t m = batch.size();
  const Range chunk = chunk_range(batch.rows, width, k);
  auto& alpha = ctx.state->alpha;
  auto rendezvous = [&] {
    if (width > 1) lane.sync.arrive_and_wait();
  };

  for (;;) {
    if (leader) {
      lane.pos = ctx.abort.load(std::memory_order_relaxed)
                     ? m
                     : ctx.cursor.fetch_add(1, std::memory_order_relaxed);
      std::fill(lane.partials.begin(), lane.partials.end(), Real{0});
    }
    rendezvous();  // (a)
    if (lane.pos >= m) break;

    const std::size_t j = ctx.order[lane.pos];
    const auto column = batch.column(j);
    lane.partials[k] = ctx.v.dot_live(column, chunk);
    rendezvous();  // (b)

    if (leader) {
      Real raw{0};
      for (Real p : lane.partials) raw += p;
      const std::size_t i = batch.indices[j];
      const Real dot = dot_from_raw(ctx.problem, raw, batch.offsets[j]);
      const auto step = update_i(ctx.problem, dot, alpha[i], batch.sq_norms[j]);
      const Real next = alpha[i] + step.delta;
      if (!std::isfinite(step.delta) || !std::isfinite(next)) {
        ctx.abort.store(true, std::memory_order_relaxed);
        lane.delta = Real{0};
      } else {
        alpha[i] = next;
        lane.delta = step.delta;
        if (step.degenerate) ctx.degenerate.fetch_add(1, std::memory_order_relaxed);
        ctx.updates.fetch_add(1, std::memory_order_relaxed);
        if (cfg_.instrument) writes_[i].fetch_add(1, std::memory_order_relaxed);
      }
    }
    rendezvous();  // (c)

    if (lane.delta != Real{0})
      ctx.v.add_scaled(column, lane.delta, chunk, cfg_.mode);
  }
}

#define HTHC_INSTANTIATE(Real)                                        \
  template BatchView<Real> full_view<Real>(const DataMatrix<Real>&,   \
                                           std::span<const std::size_t>, \
                                           std::span<const Real>);    \
  template class BatchBuffer<Real>;                                   \
  template class SolverTask<Real>;

HTHC_INSTANTIATE(float)
HTHC_INSTANTIATE(double)
#undef HTHC_INSTANTIATE

}  // namespace hthc
