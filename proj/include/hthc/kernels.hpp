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

#pragma once

#include <atomic>
#include <cstddef>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

#include "hthc/errors.hpp"

namespace hthc {

/// Half-open index range [begin, end).
struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

/// k-th of `parts` contiguous near-equal pieces of [0, length). The first
/// length % parts pieces are one element longer.
inline Range chunk_range(std::size_t length, std::size_t parts,
                         std::size_t k) noexcept {
  const std::size_t base = length / parts;
  const std::size_t extra = length % parts;
  const std::size_t begin = k * base + (k < extra ? k : extra);
  return {begin, begin + base + (k < extra ? 1 : 0)};
}

inline constexpr std::size_t kAccumulators = 8;

/// Inner product with independent accumulators so the loop carries no
/// single dependency chain.
template <typename Real>
Real dot(const Real* a, const Real* b, std::size_t len) noexcept {
  Real acc[kAccumulators] = {};
  std::size_t i = 0;
  for (; i + kAccumulators <= len; i += kAccumulators)
    for (std::size_t k = 0; k < kAccumulators; ++k) acc[k] += a[i + k] * b[i + k];
  for (; i < len; ++i) acc[0] += a[i] * b[i];
  Real s{0};
  for (std::size_t k = 0; k < kAccumulators; ++k) s += acc[k];
  return s;
}

template <typename Real>
Real dot(std::span<const Real> a, std::span<const Real> b) {
  if (a.size() != b.size()) throw ConfigError("dot: length mismatch");
  return dot(a.data(), b.data(), a.size());
}

/// Sum of the per-chunk partial products over `parts` contiguous chunks,
/// reduced in chunk order. This is the reduction the solver performs when
/// one update is shared by `parts` workers.
template <typename Real>
Real split_dot(std::span<const Real> a, std::span<const Real> b,
               std::size_t parts) {
  if (a.size() != b.size()) throw ConfigError("split_dot: length mismatch");
  if (parts == 0) throw ConfigError("split_dot: need at least one part");
  Real s{0};
  for (std::size_t k = 0; k < parts; ++k) {
    const Range r = chunk_range(a.size(), parts, k);
    s += dot(a.data() + r.begin, b.data() + r.begin, r.size());
  }
  return s;
}

enum class SyncMode { atomic, wild };

std::string_view to_string(SyncMode mode) noexcept;
SyncMode parse_sync_mode(std::string_view name);

/// The shared vector v as seen by concurrent coordinate updates. Element
/// reads and writes go through relaxed atomic_ref accesses so concurrent
/// readers always observe some complete scalar. In atomic mode each aligned
/// stripe of `stripe_len` elements is read-modify-written under its own
/// mutex, so no increment is lost. In wild mode increments race and may be
/// lost.
template <typename Real>
class StripedVector {
 public:
  StripedVector(std::span<Real> data, std::size_t stripe_len);

  std::size_t size() const noexcept { return data_.size(); }
  std::size_t stripe_len() const noexcept { return stripe_len_; }
  std::size_t stripes() const noexcept { return locks_.size(); }

  /// Sum over r of column[k] * v[k] against the live contents of v.
  Real dot_live(std::span<const Real> column, Range r) const noexcept;

  /// v[k] += delta * column[k] for k in r.
  void add_scaled(std::span<const Real> column, Real delta, Range r,
                  SyncMode mode);

 private:
  void add_unlocked(const Real* column, Real delta, std::size_t begin,
                    std::size_t end) noexcept;

  std::span<Real> data_;
  std::size_t stripe_len_;
  mutable std::vector<std::mutex> locks_;
};

/// v += delta * column over the whole vector, honouring the stripe contract.
template <typename Real>
void apply_delta(StripedVector<Real>& v, std::span<const Real> column,
                 Real delta, SyncMode mode) {
  if (column.size() != v.size())
    throw ConfigError("apply_delta: length mismatch");
  if (delta == Real{0}) return;
  v.add_scaled(column, delta, Range{0, v.size()}, mode);
}

}  // namespace hthc
