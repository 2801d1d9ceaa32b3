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

#include "hthc/tuner.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "hthc/data.hpp"
#include "hthc/errors.hpp"
#include "hthc/gap_task.hpp"
#include "hthc/glm.hpp"
#include "hthc/solver_task.hpp"

namespace hthc {

namespace {

using Curve = std::map<std::size_t, double>;

double interpolate(const Curve& curve, std::size_t d, const std::string& what) {
  if (curve.empty()) throw ConfigError("no timing entries for " + what);
  const auto hit = curve.find(d);
  if (hit != curve.end()) return hit->second;
  const auto hi = curve.upper_bound(d);
  if (hi == curve.begin() || hi == curve.end())
    throw ConfigError("timing grid for " + what + " does not bracket d = " +
                      std::to_string(d));
  const auto lo = std::prev(hi);
  const double x0 = double(lo->first), x1 = double(hi->first);
  const double frac = (double(d) - x0) / (x1 - x0);
  return lo->second + frac * (hi->second - lo->second);
}

}  // namespace

double TimingTable::time_a(std::size_t t_a, std::size_t d) const {
  Curve curve;
  for (const auto& e : a)
    if (e.t_a == t_a) curve[e.d] = e.sec_per_update;
  return interpolate(curve, d, "T_A = " + std::to_string(t_a));
}

double TimingTable::time_b(std::size_t t_b, std::size_t v_b,
                           std::size_t d) const {
  Curve curve;
  for (const auto& e : b)
    if (e.t_b == t_b && e.v_b == v_b) curve[e.d] = e.sec_per_update;
  return interpolate(curve, d,
                     "T_B = " + std::to_string(t_b) +
                         ", V_B = " + std::to_string(v_b));
}

void TimingTable::validate() const {
  std::set<std::pair<std::size_t, std::size_t>> seen_a;
  for (const auto& e : a) {
    if (!(e.sec_per_update > 0) || !std::isfinite(e.sec_per_update))
      throw ConfigError("timing entries must be positive");
    if (e.t_a == 0) throw ConfigError("timing entry with T_A = 0");
    if (!seen_a.insert({e.t_a, e.d}).second)
      throw ConfigError("duplicate A timing entry");
  }
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen_b;
  for (const auto& e : b) {
    if (!(e.sec_per_update > 0) || !std::isfinite(e.sec_per_update))
      throw ConfigError("timing entries must be positive");
    if (e.t_b == 0 || e.v_b == 0)
      throw ConfigError("timing entry with T_B = 0 or V_B = 0");
    if (!seen_b.insert({e.t_b, e.v_b, e.d}).second)
      throw ConfigError("duplicate B timing entry");
  }
}

std::string to_json(const TimingTable& table) {
  nlohmann::json j;
  j["host"] = table.host;
  j["scalar_bytes"] = table.scalar_bytes;
  j["repetitions"] = table.repetitions;
  j["a"] = nlohmann::json::array();
  for (const auto& e : table.a)
    j["a"].push_back(
        {{"t_a_workers", e.t_a}, {"d", e.d}, {"sec_per_update", e.sec_per_update}});
  j["b"] = nlohmann::json::array();
  for (const auto& e : table.b)
    j["b"].push_back({{"t_b", e.t_b},
                      {"v_b", e.v_b},
                      {"d", e.d},
                      {"sec_per_update", e.sec_per_update}});
  return j.dump(2);
}

TimingTable timing_table_from_json(const std::string& text) {
  TimingTable t;
  try {
    const auto j = nlohmann::json::parse(text);
    t.host = j.value("host", std::string{});
    t.scalar_bytes = j.value("scalar_bytes", std::size_t{4});
    t.repetitions = j.value("repetitions", std::size_t{1});
    for (const auto& e : j.at("a"))
      t.a.push_back({e.at("t_a_workers").get<std::size_t>(),
                     e.at("d").get<std::size_t>(),
                     e.at("sec_per_update").get<double>()});
    for (const auto& e : j.at("b"))
      t.b.push_back({e.at("t_b").get<std::size_t>(),
                     e.at("v_b").get<std::size_t>(),
                     e.at("d").get<std::size_t>(),
                     e.at("sec_per_update").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("timing table: ") + e.what());
  }
  t.validate();
  return t;
}

void save_timing_table(const TimingTable& table,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(table) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TimingTable load_timing_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return timing_table_from_json(buf.str());
}

TunedConfig choose_parameters(const TimingTable& table, std::size_t n,
                              std::size_t d, double r_tilde,
                              std::size_t core_budget) {
  if (n == 0) throw ConfigError("tuner needs n >= 1");
  if (!(r_tilde >= 0 && r_tilde <= 1)) throw ConfigError("r_tilde must be in [0, 1]");
  if (core_budget < 2) throw ConfigError("core budget must be >= 2");

  std::set<std::size_t> tas;
  for (const auto& e : table.a) tas.insert(e.t_a);
  std::set<std::pair<std::size_t, std::size_t>> tbs;
  for (const auto& e : table.b) tbs.insert({e.t_b, e.v_b});

  constexpr double kRel = 1e-12;
  const double nn = static_cast<double>(n);
  bool have_any = false;
  TunedConfig best, fallback;
  auto cores = [](const TunedConfig& c) { return c.t_a + c.t_b * c.v_b; };
  auto better = [&](const TunedConfig& x, const TunedConfig& y) {
    if (x.predicted_epoch_s != y.predicted_epoch_s)
      return x.predicted_epoch_s < y.predicted_epoch_s;
    if (x.m != y.m) return x.m < y.m;
    if (cores(x) != cores(y)) return cores(x) < cores(y);
    return std::tie(x.t_a, x.t_b, x.v_b) < std::tie(y.t_a, y.t_b, y.v_b);
  };

  for (std::size_t ta : tas) {
    for (auto [tb, vb] : tbs) {
      if (ta + tb * vb > core_budget) continue;
      double ta_s, tb_s;
      try {
        ta_s = table.time_a(ta, d);
        tb_s = table.time_b(tb, vb, d);
      } catch (const ConfigError&) {
        continue;
      }
      have_any = true;
      const double need = r_tilde * nn * ta_s / tb_s;
      const double m_real = std::ceil(need * (1 - kRel));
      TunedConfig c{0, ta, tb, vb, 0, 0, false};
      if (m_real <= nn) {
        c.m = std::max<std::size_t>(1, static_cast<std::size_t>(m_real));
        c.feasible = true;
        c.predicted_epoch_s = double(c.m) * tb_s;
        c.predicted_coverage = c.predicted_epoch_s / ta_s / nn;
        if (!best.feasible || better(c, best)) best = c;
      } else {
        c.m = n;
        c.predicted_epoch_s = nn * tb_s;
        c.predicted_coverage = c.predicted_epoch_s / ta_s / nn;
        if (fallback.m == 0 ||
            c.predicted_coverage > fallback.predicted_coverage ||
            (c.predicted_coverage == fallback.predicted_coverage &&
             better(c, fallback)))
          fallback = c;
      }
    }
  }
  if (!have_any)
    throw ConfigError("timing table has no worker tuple covering d = " +
                      std::to_string(d) + " within " +
                      std::to_string(core_budget) + " cores");
  return best.feasible ? best : fallback;
}

std::size_t chunk_length(std::size_t cache_bytes, std::size_t scalar_bytes) {
  if (cache_bytes == 0 || scalar_bytes == 0)
    throw ConfigError("cache and scalar sizes must be > 0");
  return std::max<std::size_t>(1, cache_bytes / (3 * scalar_bytes));
}

std::size_t suggest_vb(std::size_t d, std::size_t cache_bytes,
                       std::size_t scalar_bytes,
                       std::size_t short_vector_floor) {
  const std::size_t len = chunk_length(cache_bytes, scalar_bytes);
  if (d < short_vector_floor) return 1;
  return std::max<std::size_t>(1, (d + len - 1) / len);
}

std::string host_fingerprint() {
  char name[256] = {};
  if (gethostname(name, sizeof name - 1) != 0) name[0] = '\0';
  return std::string(name[0] ? name : "unknown") + "/" +
         std::to_string(std::thread::hardware_concurrency()) + "cpu";
}

namespace {

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t k = xs.size() / 2;
  return xs.size() % 2 ? xs[k] : 0.5 * (xs[k - 1] + xs[k]);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

template <typename Real>
TimingTable profile_tasks(const ProfileOptions& opt) {
  if (opt.reps == 0 || opt.n == 0) throw ConfigError("reps and n must be >= 1");
  const std::size_t budget = opt.core_budget
                                 ? opt.core_budget
                                 : std::max(1u, std::thread::hardware_concurrency());
  TimingTable table;
  table.host = host_fingerprint();
  table.scalar_bytes = sizeof(Real);
  table.repetitions = opt.reps;
  auto warn = [&](const std::string& msg) {
    if (opt.log) *opt.log << "warning: " << msg << '\n';
  };

  for (std::size_t d : opt.d_grid) {
    if (d == 0) throw ConfigError("d grid entries must be >= 1");
    auto inst = synth_lasso<Real>(opt.n, d, 0.05, 0.01, opt.seed + d);
    const DataMatrix<Real>& matrix = inst.matrix;
    const std::span<const Real> y(inst.targets);
    const double lambda = 0.1;
    const Problem problem =
        Problem::lasso(lambda, opt.n, init_lipschitz_bound<Real>(lambda, y));
    const auto offsets = column_offsets<Real>(problem, matrix, y);

    ModelState<Real> base(opt.n, d);
    for (std::size_t i = 0; i < opt.n; i += 7) base.alpha[i] = Real(0.01);
    const auto v0 = matrix.multiply(base.alpha);
    for (std::size_t r = 0; r < d; ++r) base.v[r] = Real(v0[r]);
    const auto snap = snapshot_for_epoch<Real>(base, problem, y);

    for (std::size_t ta : opt.ta_grid) {
      if (ta == 0 || ta > budget) {
        warn("skipping T_A = " + std::to_string(ta) + " (core budget " +
             std::to_string(budget) + ")");
        continue;
      }
      GapTask<Real> task(GapTaskConfig{ta, opt.seed}, matrix, problem);
      GapMemory<Real> z(opt.n);
      const std::uint64_t quota = opt.n;
      task.start(snap, z, quota);
      task.finish();
      std::vector<double> samples;
      for (std::size_t rep = 0; rep < opt.reps; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        task.start(snap, z, quota);
        const auto stats = task.finish();
        samples.push_back(seconds_since(t0) / double(std::max<std::uint64_t>(1, stats.updates)));
      }
      table.a.push_back({ta, d, median(samples)});
    }

    std::vector<std::size_t> all(opt.n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto view = full_view<Real>(matrix, all, offsets);
    for (std::size_t tb : opt.tb_grid) {
      for (std::size_t vb : opt.vb_grid) {
        if (tb == 0 || vb == 0 || tb * vb > budget) {
          warn("skipping T_B = " + std::to_string(tb) + ", V_B = " +
               std::to_string(vb) + " (core budget " + std::to_string(budget) +
               ")");
          continue;
        }
        SolverConfig cfg;
        cfg.t_b = tb;
        cfg.v_b = vb;
        cfg.seed = opt.seed;
        SolverTask<Real> task(cfg);
        {
          ModelState<Real> warm = base;
          task.run_epoch(view, warm, problem);
        }
        std::vector<double> samples;
        for (std::size_t rep = 0; rep < opt.reps; ++rep) {
          ModelState<Real> state = base;
          state.epoch = rep;
          const auto stats = task.run_epoch(view, state, problem);
          samples.push_back(stats.wall_s /
                            double(std::max<std::size_t>(1, stats.updates)));
        }
        table.b.push_back({tb, vb, d, median(samples)});
      }
    }
  }
  return table;
}

template TimingTable profile_tasks<float>(const ProfileOptions&);
template TimingTable profile_tasks<double>(const ProfileOptions&);

}  // namespace hthc
