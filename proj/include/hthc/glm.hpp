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

// Generalized linear models of the form
//
//   min_alpha  F(alpha) = f(D alpha) + sum_i g_i(alpha_i)
//
// with the primal-dual mapping w = grad f(v), v = D alpha. Two instances:
//
//   Lasso:  f(u) = 1/2 |u - y|^2,       g_i(a) = lambda |a| on |a| <= B
//   SVM:    f(u) = |u|^2 / (2 lambda n^2), g_i(a) = -a/n on [0, 1]
//
// The SVM instance is the hinge-loss dual with label-folded columns
// d_i = y_i x_i. The Lasso regularizer is restricted to |a| <= B so that its
// conjugate g_i*(s) = B max(0, |s| - lambda) is finite and the duality gap
// is a usable certificate.
//
// Everything here is a pure function and safe to call concurrently.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hthc/data.hpp"

namespace hthc {

enum class ModelKind { lasso, svm };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);

struct Problem {
  ModelKind kind = ModelKind::lasso;
  double lambda = 0;
  std::size_t n = 0;
  /// Bound on |alpha_i| for Lasso; unused (0) for SVM.
  double lipschitz_bound = 0;

  static Problem lasso(double lambda, std::size_t n, double bound);
  static Problem svm(double lambda, std::size_t n);

  /// lambda n^2, the SVM curvature scale.
  double svm_scale() const noexcept {
    return lambda * static_cast<double>(n) * static_cast<double>(n);
  }
};

/// B = F(0) / lambda = |y|^2 / (2 lambda). Any iterate with F(alpha) <= F(0)
/// satisfies |alpha|_1 <= B.
template <typename Real>
double init_lipschitz_bound(double lambda, std::span<const Real> targets);

/// <w, d_i> from the raw product <v, d_i>. For Lasso `offset` must be
/// <y, d_i> (w = v - y); for SVM it is ignored (w = v / (lambda n^2)).
template <typename Real>
inline Real dot_from_raw(const Problem& p, Real raw, Real offset) noexcept {
  if (p.kind == ModelKind::lasso) return raw - offset;
  return raw / static_cast<Real>(p.svm_scale());
}

/// Coordinate-wise duality gap alpha_i <w,d_i> + g_i(alpha_i) + g_i*(-<w,d_i>).
template <typename Real>
inline Real gap_i(const Problem& p, Real dot, Real alpha) noexcept {
  const Real zero{0};
  if (p.kind == ModelKind::lasso) {
    const auto lam = static_cast<Real>(p.lambda);
    const auto bound = static_cast<Real>(p.lipschitz_bound);
    return alpha * dot + lam * std::abs(alpha) +
           bound * std::max(zero, std::abs(dot) - lam);
  }
  const auto inv_n = Real{1} / static_cast<Real>(p.n);
  return alpha * dot - alpha * inv_n + std::max(zero, inv_n - dot);
}

template <typename Real>
struct CoordinateStep {
  Real delta{0};
  bool degenerate = false;
};

template <typename Real>
inline Real soft_threshold(Real x, Real tau) noexcept {
  const Real mag = std::abs(x) - tau;
  if (mag <= Real{0}) return Real{0};
  return std::copysign(mag, x);
}

/// Exact minimizer of the objective restricted to coordinate i, given the
/// current <w, d_i> and |d_i|^2. Zero-norm columns yield a zero step flagged
/// degenerate.
template <typename Real>
inline CoordinateStep<Real> update_i(const Problem& p, Real dot, Real alpha,
                                     Real col_sq_norm) noexcept {
  if (!(col_sq_norm > Real{0})) return {Real{0}, true};
  if (p.kind == ModelKind::lasso) {
    const auto lam = static_cast<Real>(p.lambda);
    const auto bound = static_cast<Real>(p.lipschitz_bound);
    Real next = soft_threshold(alpha - dot / col_sq_norm, lam / col_sq_norm);
    next = std::clamp(next, -bound, bound);
    return {next - alpha, false};
  }
  const auto inv_n = Real{1} / static_cast<Real>(p.n);
  const auto scale = static_cast<Real>(p.svm_scale());
  const Real next = std::clamp(alpha + (inv_n - dot) * scale / col_sq_norm,
                               Real{0}, Real{1});
  return {next - alpha, false};
}

/// w = grad f(v).
template <typename Real>
std::vector<Real> w_from_v(const Problem& p, std::span<const Real> v,
                           std::span<const Real> targets);

/// Per-column offsets consumed by dot_from_raw: <y, d_i> for Lasso, zeros
/// for SVM.
template <typename Real>
std::vector<Real> column_offsets(const Problem& p, const DataMatrix<Real>& m,
                                 std::span<const Real> targets);

/// F(alpha) = f(v) + sum g_i(alpha_i), evaluated in double. Infeasible
/// coordinates give +infinity.
template <typename Real>
double primal_objective(const Problem& p, std::span<const Real> alpha,
                        std::span<const Real> v, std::span<const Real> targets);

/// Fenchel dual value D(w) = -f*(w) - sum g_i*(-<w, d_i>), such that
/// F(alpha) - D(w(v)) = sum_i gap_i.
template <typename Real>
double dual_objective(const Problem& p, const DataMatrix<Real>& m,
                      std::span<const Real> w, std::span<const Real> targets);

}  // namespace hthc
