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

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hthc {

/// Fixed set of long-lived threads that repeatedly execute one job on every
/// worker. launch() hands the job to all workers; wait() is the rendezvous
/// that returns once each of them has finished it. The first exception
/// thrown by any worker is rethrown from wait().
class WorkerTeam {
 public:
  using Job = std::function<void(std::size_t worker)>;

  explicit WorkerTeam(std::size_t workers);
  ~WorkerTeam();

  WorkerTeam(const WorkerTeam&) = delete;
  WorkerTeam& operator=(const WorkerTeam&) = delete;

  std::size_t size() const noexcept { return threads_.size(); }

  void launch(Job job);
  void wait();
  void run(Job job) {
    launch(std::move(job));
    wait();
  }

  /// Whether a launched job is still executing on some worker.
  bool busy() const;

 private:
  void worker_main(std::size_t id);

  std::vector<std::thread> threads_;
  mutable std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  Job job_;
  std::uint64_t generation_ = 0;
  std::size_t remaining_ = 0;
  bool launched_ = false;
  bool shutdown_ = false;
  std::exception_ptr error_;
};

}  // namespace hthc
