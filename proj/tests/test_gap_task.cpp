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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>
#include <vector>

#include "hthc/baselines.hpp"
#include "hthc/errors.hpp"
#include "hthc/gap_task.hpp"

using namespace hthc;

namespace {

struct Fixture {
  LassoInstance<double> inst = synth_lasso<double>(4, 4, 0.5, 0.1, 12);
  Problem problem = Problem::lasso(
      0.05, 4, init_lipschitz_bound<double>(0.05, std::span<const double>(inst.targets)));
  ModelState<double> state{4, 4};

  Fixture() {
    state.alpha = {0.2, -0.1, 0.0, 0.4};
    const auto v = inst.matrix.multiply(state.alpha);
    state.v.assign(v.begin(), v.end());
  }

  double oracle_gap(std::size_t i) const {
    const auto w = w_from_v<double>(problem, state.v, inst.targets);
    const auto dots = inst.matrix.multiply_transposed(w);
    return gap_i<double>(problem, dots[i], state.alpha[i]);
  }
};

}  // namespace

TEST_CASE("pre-raised stop performs no updates") {
  Fixture f;
  auto snap = snapshot_for_epoch<double>(f.state, f.problem, f.inst.targets);
  GapMemory<double> z(4);
  z.fill(-1.0);
  std::atomic<bool> stop{true};
  const auto done = run_gap_sampling<double>({2, 1}, f.inst.matrix, f.problem, snap, z, stop);
  CHECK(done == 0);
  for (double x : z.view()) CHECK(x == -1.0);
}

TEST_CASE("single seeded sample matches the gap oracle") {
  Fixture f;
  auto snap = snapshot_for_epoch<double>(f.state, f.problem, f.inst.targets);
  // Find a seed whose first draw is coordinate 3.
  std::uint64_t seed = 0;
  while (CoordinateSampler(4, seed, snap.epoch, 0).next() != 3) ++seed;
  GapMemory<double> z(4);
  std::atomic<bool> stop{false};
  const auto done =
      run_gap_sampling<double>({1, seed}, f.inst.matrix, f.problem, snap, z, stop, 1);
  CHECK(done == 1);
  CHECK(z.writes() == 1);
  CHECK(z.load(3) == doctest::Approx(f.oracle_gap(3)).epsilon(1e-12));
  CHECK(z.load(0) == 0.0);
}

TEST_CASE("scores at the optimum are near zero") {
  auto inst = synth_lasso<double>(40, 20, 0.1, 0.05, 3);
  const std::span<const double> y(inst.targets);
  const double lam = 0.05;
  auto p = Problem::lasso(lam, 40, init_lipschitz_bound<double>(lam, y));
  auto ref = reference_scd<double>(inst.matrix, y, p, 1e-12);
  REQUIRE(ref.converged);
  ModelState<double> st(40, 20);
  st.alpha = ref.alpha;
  const auto v = inst.matrix.multiply(st.alpha);
  st.v.assign(v.begin(), v.end());
  auto snap = snapshot_for_epoch<double>(st, p, y);
  GapMemory<double> z(40);
  std::atomic<bool> stop{false};
  run_gap_sampling<double>({2, 9}, inst.matrix, p, snap, z, stop, 200);
  const double scale = 0.5 * std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
  for (double x : z.view()) CHECK(x <= 1e-6 * scale);
}

TEST_CASE("snapshot isolation") {
  Fixture f;
  auto snap = snapshot_for_epoch<double>(f.state, f.problem, f.inst.targets);
  auto again = snapshot_for_epoch<double>(f.state, f.problem, f.inst.targets);
  CHECK(snap.alpha == again.alpha);
  CHECK(snap.v == again.v);
  CHECK(snap.w == again.w);
  const double before = score_coordinate<double>(f.problem, f.inst.matrix, snap, 1);
  f.state.alpha[1] = 5.0;
  f.state.v.assign(4, 9.0);
  CHECK(score_coordinate<double>(f.problem, f.inst.matrix, snap, 1) == before);

  ModelState<double> empty;
  CHECK_THROWS_AS(snapshot_for_epoch<double>(empty, f.problem, f.inst.targets), ConfigError);
}

TEST_CASE("svm snapshot folds the scale into the dot") {
  auto ds = synth_svm<double>(6, 3, 1.0, 2);
  auto p = Problem::svm(0.1, 6);
  ModelState<double> st(6, 3);
  st.alpha = {0.1, 0.5, 0, 1, 0.3, 0.2};
  const auto v = ds.matrix.multiply(st.alpha);
  st.v.assign(v.begin(), v.end());
  auto snap = snapshot_for_epoch<double>(st, p, {});
  CHECK(snap.w.empty());
  const auto w = w_from_v<double>(p, st.v, {});
  const auto dots = ds.matrix.multiply_transposed(w);
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(score_coordinate<double>(p, ds.matrix, snap, i) ==
          doctest::Approx(gap_i<double>(p, dots[i], st.alpha[i])).epsilon(1e-12));
}

TEST_CASE("sampling is uniform (chi-squared)") {
  const std::size_t n = 10, draws = 1000000;
  CoordinateSampler s(n, 42, 0, 0);
  std::vector<double> counts(n, 0);
  for (std::size_t k = 0; k < draws; ++k) ++counts[s.next()];
  const double expect = double(draws) / n;
  double chi2 = 0;
  for (double c : counts) {
    chi2 += (c - expect) * (c - expect) / expect;
    CHECK(std::abs(c - expect) <= 3 * std::sqrt(expect * (1 - 1.0 / n)) + 1);
  }
  // 9 degrees of freedom, p = 0.001 critical value.
  CHECK(chi2 < 27.877);
}

TEST_CASE("sampler streams are deterministic and distinct") {
  CoordinateSampler a(1000, 1, 2, 3), b(1000, 1, 2, 3), c(1000, 1, 2, 4);
  int same = 0;
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next();
    CHECK(x == b.next());
    same += x == c.next();
  }
  CHECK(same < 10);
}

TEST_CASE("freshness accounting and isolation under a running task") {
  auto inst = synth_lasso<float>(200, 50, 0.1, 0.1, 5);
  const std::span<const float> y(inst.targets);
  auto p = Problem::lasso(0.1, 200, init_lipschitz_bound<float>(0.1, y));
  ModelState<float> st(200, 50);
  for (std::size_t i = 0; i < 200; i += 3) st.alpha[i] = 0.01f;
  const auto v = inst.matrix.multiply(st.alpha);
  st.v.assign(v.begin(), v.end());
  const auto alpha_before = st.alpha;
  const auto v_before = st.v;
  const std::vector<float> matrix_before(inst.matrix.values().begin(),
                                         inst.matrix.values().end());

  GapTask<float> task({3, 7}, inst.matrix, p);
  GapMemory<float> z(200);
  for (int epoch = 0; epoch < 5; ++epoch) {
    st.epoch = epoch;
    auto snap = snapshot_for_epoch<float>(st, p, y);
    z.begin_epoch();
    task.start(snap, z);
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    const auto stats = task.stop();
    std::uint64_t sum = 0;
    for (auto c : stats.per_worker) sum += c;
    CHECK(sum == stats.updates);
    CHECK(z.updates_this_epoch() == stats.updates);
    CHECK(stats.writes_after_stop <= 3);
    const auto quiet = z.writes();
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
    CHECK(z.writes() == quiet);
  }
  CHECK(st.alpha == alpha_before);
  CHECK(st.v == v_before);
  CHECK(std::equal(matrix_before.begin(), matrix_before.end(),
                   inst.matrix.values().begin()));
  for (float x : z.view()) {
    CHECK(std::isfinite(x));
    CHECK(x >= -1e-3f);
  }
}

TEST_CASE("quota mode is exact") {
  auto inst = synth_lasso<double>(50, 10, 0.1, 0.1, 5);
  auto p = Problem::lasso(0.1, 50, init_lipschitz_bound<double>(0.1, std::span<const double>(inst.targets)));
  ModelState<double> st(50, 10);
  auto snap = snapshot_for_epoch<double>(st, p, inst.targets);
  GapTask<double> task({4, 1}, inst.matrix, p);
  GapMemory<double> z(50);
  task.start(snap, z, 25);
  const auto stats = task.finish();
  CHECK(stats.updates == 100);
  for (auto c : stats.per_worker) CHECK(c == 25);
  CHECK_THROWS_AS(task.start(snap, *std::make_unique<GapMemory<double>>(3)), ConfigError);
}

TEST_CASE("zero workers") {
  auto inst = synth_lasso<double>(5, 3, 0.2, 0.0, 1);
  auto p = Problem::lasso(0.1, 5, 1.0);
  ModelState<double> st(5, 3);
  auto snap = snapshot_for_epoch<double>(st, p, inst.targets);
  GapTask<double> task({0, 1}, inst.matrix, p);
  GapMemory<double> z(5);
  task.start(snap, z);
  CHECK(task.stop().updates == 0);
}

TEST_CASE("destroying a running task stops it") {
  auto inst = synth_lasso<double>(50, 10, 0.1, 0.1, 5);
  auto p = Problem::lasso(0.1, 50, 1.0);
  ModelState<double> st(50, 10);
  auto snap = snapshot_for_epoch<double>(st, p, inst.targets);
  GapMemory<double> z(50);
  {
    GapTask<double> task({2, 1}, inst.matrix, p);
    task.start(snap, z);
  }
  const auto w = z.writes();
  std::this_thread::sleep_for(std::chrono::milliseconds(1));
  CHECK(z.writes() == w);
}

TEST_CASE("stop waits for the requested minimum progress") {
  auto inst = synth_lasso<double>(50, 10, 0.1, 0.1, 5);
  auto p = Problem::lasso(0.1, 50, 1.0);
  ModelState<double> st(50, 10);
  auto snap = snapshot_for_epoch<double>(st, p, inst.targets);
  GapTask<double> task({2, 1}, inst.matrix, p);
  GapMemory<double> z(50);
  for (int k = 0; k < 20; ++k) {
    task.start(snap, z);
    const auto stats = task.stop(5);
    CHECK(stats.updates >= 5);
    CHECK(stats.writes_after_stop <= 2);
  }
}
