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

#include <cstddef>
#include <span>
#include <vector>

#include "hthc/coordinator.hpp"
#include "hthc/data.hpp"
#include "hthc/glm.hpp"

namespace hthc {

/// Single-task asynchronous coordinate descent: every epoch visits all n
/// coordinates once in a fresh seeded permutation on the task-B machinery.
/// Uses cfg.solver, cfg.seed and the stopping fields of cfg; the batch and
/// task-A fields are ignored.
template <typename Real>
TrainResult<Real> st_train(const DataMatrix<Real>& matrix,
                           std::span<const Real> targets, const Problem& problem,
                           const TrainConfig& cfg,
                           const EpochObserver<Real>& observer = {});

struct ReferenceResult {
  std::vector<double> alpha;
  double objective = 0;
  double gap = 0;
  std::size_t passes = 0;
  bool converged = false;
};

/// Sequential cyclic coordinate descent in double precision. v is rebuilt
/// from scratch every 100 passes. Stops when the duality gap drops to tol;
/// otherwise returns the best iterate seen with converged = false.
template <typename Real>
ReferenceResult reference_scd(const DataMatrix<Real>& matrix,
                              std::span<const Real> targets,
                              const Problem& problem, double tol,
                              std::size_t max_passes = 100000);

template <typename Real>
DataMatrix<double> to_double(const DataMatrix<Real>& m);

}  // namespace hthc
