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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <type_traits>
#include <vector>

namespace hthc {

enum class ScalarType : std::uint8_t { f32 = 1, f64 = 2 };

template <typename Real>
constexpr ScalarType scalar_type_of() {
  static_assert(std::is_same_v<Real, float> || std::is_same_v<Real, double>);
  return std::is_same_v<Real, float> ? ScalarType::f32 : ScalarType::f64;
}

/// Dense column-major d x n matrix. Column i is the contiguous range
/// values[i*d, (i+1)*d). Squared column norms are cached at construction.
/// Immutable after construction, so safe to share across threads.
template <typename Real>
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(std::size_t rows, std::size_t cols, std::vector<Real> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return cols_ == 0; }

  std::span<const Real> column(std::size_t i) const noexcept {
    return {values_.data() + i * rows_, rows_};
  }
  std::span<const Real> values() const noexcept { return values_; }

  Real col_sq_norm(std::size_t i) const noexcept { return col_sq_norms_[i]; }
  std::span<const Real> col_sq_norms() const noexcept { return col_sq_norms_; }

  /// Squared norms recomputed from the stored values (double accumulation).
  std::vector<double> recompute_sq_norms() const;

  /// out = D * alpha, accumulated in double.
  std::vector<double> multiply(std::span<const Real> alpha) const;

  /// out_i = <x, d_i> for every column, accumulated in double.
  std::vector<double> multiply_transposed(std::span<const Real> x) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> values_;
  std::vector<Real> col_sq_norms_;
};

/// Model vector alpha (length n) and shared vector v = D alpha (length d).
template <typename Real>
struct ModelState {
  ModelState() = default;
  ModelState(std::size_t n, std::size_t d) : alpha(n, Real{0}), v(d, Real{0}) {}

  std::vector<Real> alpha;
  std::vector<Real> v;
  std::uint64_t epoch = 0;
};

/// Possibly stale coordinate-wise duality gaps, written concurrently by the
/// gap-scoring workers. Individual scalar stores are atomic (relaxed); the
/// vector is only read as a whole while the writers are paused.
template <typename Real>
class GapMemory {
 public:
  explicit GapMemory(std::size_t n) : z_(n, Real{0}) {}

  GapMemory(const GapMemory&) = delete;
  GapMemory& operator=(const GapMemory&) = delete;

  std::size_t size() const noexcept { return z_.size(); }

  void store(std::size_t i, Real value) noexcept {
    std::atomic_ref<Real>(z_[i]).store(value, std::memory_order_relaxed);
    writes_.fetch_add(1, std::memory_order_relaxed);
  }

  Real load(std::size_t i) const noexcept {
    return std::atomic_ref<Real>(const_cast<Real&>(z_[i]))
        .load(std::memory_order_relaxed);
  }

  /// Whole-vector view. Only meaningful while no writer is active.
  std::span<const Real> view() const noexcept { return z_; }

  /// Monotone count of all stores since construction.
  std::uint64_t writes() const noexcept {
    return writes_.load(std::memory_order_acquire);
  }

  void begin_epoch() noexcept { epoch_mark_ = writes(); }
  std::uint64_t updates_this_epoch() const noexcept {
    return writes() - epoch_mark_;
  }

  void fill(Real value) noexcept {
    for (auto& x : z_) x = value;
  }

 private:
  std::vector<Real> z_;
  std::atomic<std::uint64_t> writes_{0};
  std::uint64_t epoch_mark_ = 0;
};

/// A matrix together with one label (or regression target) per line of the
/// source file.
template <typename Real>
struct Dataset {
  DataMatrix<Real> matrix;
  std::vector<Real> labels;
};

/// Parses LIBSVM text (`label idx:val ...`, 1-based ascending indices) into
/// a dense matrix with one column per line and d = max feature index. With
/// fold_labels each column is scaled by its label (d_i := y_i x_i).
template <typename Real>
Dataset<Real> parse_libsvm(std::istream& in, bool fold_labels = false);

template <typename Real>
Dataset<Real> load_libsvm(const std::filesystem::path& path,
                          bool fold_labels = false);

/// Returns the matrix with column i multiplied by labels[i].
template <typename Real>
DataMatrix<Real> fold_labels(const DataMatrix<Real>& m,
                             std::span<const Real> labels);

template <typename Real>
DataMatrix<Real> transpose(const DataMatrix<Real>& m);

// Binary layout (little endian):
//   "HTHC" | u8 version | u64 d | u64 n | u8 dtype | d*n scalars column-major
inline constexpr std::uint8_t kBinaryVersion = 1;
inline constexpr std::size_t kBinaryHeaderBytes = 4 + 1 + 8 + 8 + 1;

template <typename Real>
void write_binary(const DataMatrix<Real>& m, std::ostream& out);

/// Reads either dtype; values stored as the other precision are converted.
template <typename Real>
DataMatrix<Real> read_binary(std::istream& in);

template <typename Real>
void save_binary(const DataMatrix<Real>& m, const std::filesystem::path& path);

template <typename Real>
DataMatrix<Real> load_binary(const std::filesystem::path& path);

template <typename Real>
struct LassoInstance {
  DataMatrix<Real> matrix;
  std::vector<Real> targets;
  std::vector<Real> alpha_true;
};

/// Synthetic sparse regression: unit-norm Gaussian columns, ceil(frac*n)
/// nonzero true coefficients, targets = D alpha_true + N(0, noise_sd^2).
template <typename Real>
LassoInstance<Real> synth_lasso(std::size_t n, std::size_t d,
                                double support_frac, double noise_sd,
                                std::uint64_t seed);

/// Synthetic two-class problem with n samples in d dimensions. Columns are
/// returned label-folded; labels are +-1.
template <typename Real>
Dataset<Real> synth_svm(std::size_t n, std::size_t d, double separation,
                        std::uint64_t seed);

}  // namespace hthc
