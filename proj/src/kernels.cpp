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

#include "hthc/kernels.hpp"

#include <algorithm>
#include <string>

namespace hthc {

std::string_view to_string(SyncMode mode) noexcept {
  return mode == SyncMode::atomic ? "atomic" : "wild";
}

SyncMode parse_sync_mode(std::string_view name) {
  if (name == "atomic") return SyncMode::atomic;
  if (name == "wild") return SyncMode::wild;
  throw ConfigError("unknown sync mode '" + std::string(name) + "'");
}

template <typename Real>
StripedVector<Real>::StripedVector(std::span<Real> data, std::size_t stripe_len)
    : data_(data),
      stripe_len_(stripe_len),
      locks_(stripe_len == 0 ? 0 : (data.size() + stripe_len - 1) / stripe_len) {
  if (stripe_len == 0) throw ConfigError("stripe length must be >= 1");
}

template <typename Real>
Real StripedVector<Real>::dot_live(std::span<const Real> column,
                                   Range r) const noexcept {
  constexpr std::size_t kLanes = 4;
  Real acc[kLanes] = {};
  Real* v = data_.data();
  const Real* c = column.data();
  std::size_t k = r.begin;
  for (; k + kLanes <= r.end; k += kLanes)
    for (std::size_t j = 0; j < kLanes; ++j)
      acc[j] += c[k + j] * std::atomic_ref<Real>(v[k + j])
                               .load(std::memory_order_relaxed);
  for (; k < r.end; ++k)
    acc[0] += c[k] * std::atomic_ref<Real>(v[k]).load(std::memory_order_relaxed);
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

template <typename Real>
void StripedVector<Real>::add_unlocked(const Real* column, Real delta,
                                       std::size_t begin,
                                       std::size_t end) noexcept {
  Real* v = data_.data();
  for (std::size_t k = begin; k < end; ++k) {
    std::atomic_ref<Real> ref(v[k]);
    ref.store(ref.load(std::memory_order_relaxed) + delta * column[k],
              std::memory_order_relaxed);
  }
}

template <typename Real>
void StripedVector<Real>::add_scaled(std::span<const Real> column, Real delta,
                                     Range r, SyncMode mode) {
  if (mode == SyncMode::wild) {
    add_unlocked(column.data(), delta, r.begin, r.end);
    return;
  }
  std::size_t k = r.begin;
  while (k < r.end) {
    const std::size_t stripe = k / stripe_len_;
    const std::size_t stop = std::min(r.end, (stripe + 1) * stripe_len_);
    std::lock_guard lock(locks_[stripe]);
    add_unlocked(column.data(), delta, k, stop);
    k = stop;
  }
}

template class StripedVector<float>;
template class StripedVector<double>;

}  // namespace hthc
