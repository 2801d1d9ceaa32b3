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

// Task B: asynchronous parallel coordinate descent over a batch of selected
// coordinates.
//
// t_b updater lanes run concurrently. Each lane is a group of v_b workers
// that share one coordinate update at a time: the column and v are split
// into v_b contiguous chunks, every worker computes a partial product over
// its chunk and later applies the increment to the same chunk of v. Within
// a lane the workers meet at three rendezvous points per update:
//
//   (a) the leader has claimed the next coordinate and reset the partials,
//   (b) every partial product is in,
//   (c) the leader has computed delta and written alpha_i.
//
// Lanes read v without locking (the dot sees whatever other lanes have
// written so far). Increments to v are serialized per stripe in atomic mode
// and unsynchronized in wild mode.

#pragma once

#include <atomic>
#include <barrier>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hthc/data.hpp"
#include "hthc/glm.hpp"
#include "hthc/kernels.hpp"
#include "hthc/worker_team.hpp"

namespace hthc {

inline constexpr std::size_t kDefaultStripeLen = 1024;

struct SolverConfig {
  std::size_t t_b = 1;
  std::size_t v_b = 1;
  SyncMode mode = SyncMode::atomic;
  std::size_t stripe_len = kDefaultStripeLen;
  std::uint64_t seed = 0;
  /// Count alpha writes per coordinate (exactly-once checks).
  bool instrument = false;
};

/// Columns a solver epoch works on: column j of the batch is the contiguous
/// range columns[j*rows, (j+1)*rows) and corresponds to coordinate
/// indices[j] of the model.
template <typename Real>
struct BatchView {
  std::span<const std::size_t> indices;
  const Real* columns = nullptr;
  std::size_t rows = 0;
  std::span<const Real> sq_norms;
  std::span<const Real> offsets;

  std::size_t size() const noexcept { return indices.size(); }
  std::span<const Real> column(std::size_t j) const noexcept {
    return {columns + j * rows, rows};
  }
};

/// The whole matrix as a batch, in natural order. `offsets` must outlive
/// the view, as must the returned index storage.
template <typename Real>
BatchView<Real> full_view(const DataMatrix<Real>& matrix,
                          std::span<const std::size_t> all_indices,
                          std::span<const Real> offsets);

/// Contiguous private copy of the selected columns for task B.
template <typename Real>
class BatchBuffer {
 public:
  BatchBuffer() = default;

  /// Copies columns P (distinct, in range) in the given order.
  static BatchBuffer stage(const DataMatrix<Real>& matrix,
                           std::span<const std::size_t> indices,
                           std::span<const Real> offsets);

  std::size_t size() const noexcept { return indices_.size(); }
  std::size_t rows() const noexcept { return rows_; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::span<const Real> column(std::size_t j) const noexcept {
    return {columns_.data() + j * rows_, rows_};
  }
  std::span<const Real> sq_norms() const noexcept { return sq_norms_; }

  BatchView<Real> view() const noexcept {
    return {indices_, columns_.data(), rows_, sq_norms_, offsets_};
  }

 private:
  std::vector<std::size_t> indices_;
  std::vector<Real> columns_;
  std::vector<Real> sq_norms_;
  std::vector<Real> offsets_;
  std::size_t rows_ = 0;
};

struct EpochStats {
  std::size_t updates = 0;
  std::size_t degenerate = 0;
  double wall_s = 0;
  /// Per model coordinate; only filled when SolverConfig::instrument is set.
  std::vector<std::uint32_t> writes_per_coordinate;
};

/// Pool of t_b * v_b long-lived solver workers.
template <typename Real>
class SolverTask {
 public:
  explicit SolverTask(SolverConfig cfg);
  ~SolverTask();

  SolverTask(const SolverTask&) = delete;
  SolverTask& operator=(const SolverTask&) = delete;

  const SolverConfig& config() const noexcept { return cfg_; }

  /// Processes every coordinate of the batch exactly once, in a permutation
  /// seeded by (seed, state.epoch). state.v must be consistent with
  /// state.alpha on entry for the certificate to stay meaningful.
  EpochStats run_epoch(const BatchView<Real>& batch, ModelState<Real>& state,
                       const Problem& problem);

 private:
  struct Lane;
  struct EpochContext;

  void worker(std::size_t id, EpochContext& ctx);

  SolverConfig cfg_;
  std::vector<std::unique_ptr<Lane>> lanes_;
  std::unique_ptr<std::atomic<std::uint32_t>[]> writes_;
  std::size_t writes_len_ = 0;
  WorkerTeam team_;
};

/// Copies the selected columns (see BatchBuffer::stage).
template <typename Real>
BatchBuffer<Real> stage_batch(const DataMatrix<Real>& matrix,
                              std::span<const std::size_t> indices,
                              std::span<const Real> offsets) {
  return BatchBuffer<Real>::stage(matrix, indices, offsets);
}

}  // namespace hthc
