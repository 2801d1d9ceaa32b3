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

#include "hthc/worker_team.hpp"

#include <stdexcept>
#include <utility>

namespace hthc {

WorkerTeam::WorkerTeam(std::size_t workers) {
  threads_.reserve(workers);
  for (std::size_t id = 0; id < workers; ++id)
    threads_.emplace_back([this, id] { worker_main(id); });
}

WorkerTeam::~WorkerTeam() {
  {
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return remaining_ == 0; });
    shutdown_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerTeam::launch(Job job) {
  {
    std::lock_guard lock(mutex_);
    if (launched_) throw std::logic_error("WorkerTeam: job already running");
    launched_ = true;
    if (threads_.empty()) return;
    job_ = std::move(job);
    remaining_ = threads_.size();
    error_ = nullptr;
    ++generation_;
  }
  start_cv_.notify_all();
}

void WorkerTeam::wait() {
  std::exception_ptr error;
  {
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return remaining_ == 0; });
    launched_ = false;
    job_ = nullptr;
    error = std::exchange(error_, nullptr);
  }
  if (error) std::rethrow_exception(error);
}

bool WorkerTeam::busy() const {
  std::lock_guard lock(mutex_);
  return remaining_ != 0;
}

void WorkerTeam::worker_main(std::size_t id) {
  std::uint64_t seen = 0;
  for (;;) {
    Job job;
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
      if (shutdown_) return;
      seen = generation_;
      job = job_;
    }
    std::exception_ptr error;
    try {
      job(id);
    } catch (...) {
      error = std::current_exception();
    }
    {
      std::lock_guard lock(mutex_);
      if (error && !error_) error_ = error;
      if (--remaining_ == 0) done_cv_.notify_all();
    }
  }
}

}  // namespace hthc
