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

#include "hthc/glm.hpp"

#include <limits>
#include <string>

#include "hthc/errors.hpp"

namespace hthc {

std::string_view to_string(ModelKind kind) noexcept {
  return kind == ModelKind::lasso ? "lasso" : "svm";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "lasso") return ModelKind::lasso;
  if (name == "svm") return ModelKind::svm;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

Problem Problem::lasso(double lambda, std::size_t n, double bound) {
  if (!(lambda > 0)) throw ConfigError("lambda must be > 0");
  if (n == 0) throw ConfigError("problem needs at least one coordinate");
  if (!(bound >= 0)) throw ConfigError("Lipschitz bound must be >= 0");
  return {ModelKind::lasso, lambda, n, bound};
}

Problem Problem::svm(double lambda, std::size_t n) {
  if (!(lambda > 0)) throw ConfigError("lambda must be > 0");
  if (n == 0) throw ConfigError("problem needs at least one coordinate");
  return {ModelKind::svm, lambda, n, 0.0};
}

template <typename Real>
double init_lipschitz_bound(double lambda, std::span<const Real> targets) {
  if (!(lambda > 0)) throw ConfigError("lambda must be > 0");
  double sq = 0;
  for (Real y : targets) sq += double(y) * double(y);
  return 0.5 * sq / lambda;
}

template <typename Real>
std::vector<Real> w_from_v(const Problem& p, std::span<const Real> v,
                           std::span<const Real> targets) {
  std::vector<Real> w(v.size());
  if (p.kind == ModelKind::lasso) {
    if (targets.size() != v.size())
      throw ConfigError("targets length must equal v length");
    for (std::size_t r = 0; r < v.size(); ++r) w[r] = v[r] - targets[r];
  } else {
    const auto inv = static_cast<Real>(1.0 / p.svm_scale());
    for (std::size_t r = 0; r < v.size(); ++r) w[r] = v[r] * inv;
  }
  return w;
}

template <typename Real>
std::vector<Real> column_offsets(const Problem& p, const DataMatrix<Real>& m,
                                 std::span<const Real> targets) {
  if (p.kind == ModelKind::svm) return std::vector<Real>(m.cols(), Real{0});
  if (targets.size() != m.rows())
    throw ConfigError("targets length must equal the matrix row count");
  auto dots = m.multiply_transposed(targets);
  return std::vector<Real>(dots.begin(), dots.end());
}

template <typename Real>
double primal_objective(const Problem& p, std::span<const Real> alpha,
                        std::span<const Real> v,
                        std::span<const Real> targets) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double smooth = 0;
  double reg = 0;
  if (p.kind == ModelKind::lasso) {
    for (std::size_t r = 0; r < v.size(); ++r) {
      const double res = double(v[r]) - double(targets[r]);
      smooth += res * res;
    }
    smooth *= 0.5;
    for (Real a : alpha) {
      if (std::abs(double(a)) > p.lipschitz_bound) return inf;
      reg += p.lambda * std::abs(double(a));
    }
  } else {
    for (Real x : v) smooth += double(x) * double(x);
    smooth /= 2.0 * p.svm_scale();
    const double inv_n = 1.0 / static_cast<double>(p.n);
    for (Real a : alpha) {
      if (a < Real{0} || a > Real{1}) return inf;
      reg -= double(a) * inv_n;
    }
  }
  return smooth + reg;
}

template <typename Real>
double dual_objective(const Problem& p, const DataMatrix<Real>& m,
                      std::span<const Real> w, std::span<const Real> targets) {
  const auto dots = m.multiply_transposed(w);
  double w_sq = 0;
  for (Real x : w) w_sq += double(x) * double(x);
  double conj = 0;
  if (p.kind == ModelKind::lasso) {
    double wy = 0;
    for (std::size_t r = 0; r < w.size(); ++r)
      wy += double(w[r]) * double(targets[r]);
    for (double s : dots)
      conj += p.lipschitz_bound * std::max(0.0, std::abs(s) - p.lambda);
    return -0.5 * w_sq - wy - conj;
  }
  const double inv_n = 1.0 / static_cast<double>(p.n);
  for (double s : dots) conj += std::max(0.0, inv_n - s);
  return -0.5 * p.svm_scale() * w_sq - conj;
}

#define HTHC_INSTANTIATE(Real)                                                \
  template double init_lipschitz_bound<Real>(double, std::span<const Real>);  \
  template std::vector<Real> w_from_v<Real>(                                  \
      const Problem&, std::span<const Real>, std::span<const Real>);          \
  template std::vector<Real> column_offsets<Real>(                            \
      const Problem&, const DataMatrix<Real>&, std::span<const Real>);        \
  template double primal_objective<Real>(const Problem&,                      \
                                         std::span<const Real>,               \
                                         std::span<const Real>,               \
                                         std::span<const Real>);              \
  template double dual_objective<Real>(const Problem&,                        \
                                       const DataMatrix<Real>&,               \
                                       std::span<const Real>,                 \
                                       std::span<const Real>);

HTHC_INSTANTIATE(float)
HTHC_INSTANTIATE(double)
#undef HTHC_INSTANTIATE

}  // namespace hthc
