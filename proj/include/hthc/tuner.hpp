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

// Per-update cost table and the parameter model
//
//   min_{m, T_A, T_B, V_B}  m t_B(T_B, V_B, d)
//   s.t.  m t_B(T_B, V_B, d) / t_A(T_A, d) >= r n,
//         T_A + T_B V_B <= cores.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hthc {

struct TimingEntryA {
  std::size_t t_a = 1;
  std::size_t d = 0;
  double sec_per_update = 0;
};

struct TimingEntryB {
  std::size_t t_b = 1;
  std::size_t v_b = 1;
  std::size_t d = 0;
  double sec_per_update = 0;
};

struct TimingTable {
  std::string host;
  std::size_t scalar_bytes = 4;
  std::size_t repetitions = 1;
  std::vector<TimingEntryA> a;
  std::vector<TimingEntryB> b;

  /// Seconds per A-update for t_a workers at dimension d. Exact at measured
  /// grid points, linear in d between them. Throws ConfigError when d is not
  /// bracketed by the grid for that worker count.
  double time_a(std::size_t t_a, std::size_t d) const;
  double time_b(std::size_t t_b, std::size_t v_b, std::size_t d) const;

  /// Throws ConfigError on non-positive times or duplicate keys.
  void validate() const;
};

std::string to_json(const TimingTable& table);
TimingTable timing_table_from_json(const std::string& text);
void save_timing_table(const TimingTable& table,
                       const std::filesystem::path& path);
TimingTable load_timing_table(const std::filesystem::path& path);

struct TunedConfig {
  std::size_t m = 0;
  std::size_t t_a = 0;
  std::size_t t_b = 0;
  std::size_t v_b = 0;
  /// m t_B in seconds.
  double predicted_epoch_s = 0;
  /// (m t_B / t_A) / n, the fraction of z refreshed per epoch.
  double predicted_coverage = 0;
  bool feasible = false;
};

/// Exhaustive search over every worker tuple in the table that fits the
/// core budget and covers d. Among feasible tuples the smallest predicted
/// epoch wins; ties go to smaller m, then fewer cores, then the
/// lexicographically smallest (T_A, T_B, V_B). With no feasible tuple the
/// result uses m = n on the tuple with the largest coverage and
/// feasible = false.
TunedConfig choose_parameters(const TimingTable& table, std::size_t n,
                              std::size_t d, double r_tilde,
                              std::size_t core_budget);

inline constexpr std::size_t kDefaultCacheBytes = std::size_t{1} << 20;
inline constexpr std::size_t kShortVectorFloor = 130000;

/// Elements per chunk so that a chunk takes about a third of the cache.
std::size_t chunk_length(std::size_t cache_bytes, std::size_t scalar_bytes);

std::size_t suggest_vb(std::size_t d, std::size_t cache_bytes = kDefaultCacheBytes,
                       std::size_t scalar_bytes = 4,
                       std::size_t short_vector_floor = kShortVectorFloor);

struct ProfileOptions {
  std::vector<std::size_t> d_grid{1000, 4000, 16000};
  std::vector<std::size_t> ta_grid{1, 2, 4};
  std::vector<std::size_t> tb_grid{1, 2, 4};
  std::vector<std::size_t> vb_grid{1, 2};
  std::size_t reps = 5;
  std::size_t n = 600;
  /// Cores available; 0 means std::thread::hardware_concurrency().
  std::size_t core_budget = 0;
  std::uint64_t seed = 1;
  /// Warnings about skipped grid points go here when set.
  std::ostream* log = nullptr;
};

/// Times the real A and B update paths on synthetic Lasso columns and
/// records the median seconds per update over `reps` repetitions. t_A is
/// wall time divided by the total number of scores of all T_A workers.
template <typename Real>
TimingTable profile_tasks(const ProfileOptions& options);

std::string host_fingerprint();

}  // namespace hthc
