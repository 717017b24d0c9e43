#pragma once

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "qapsa/errors.hpp"

namespace qapsa {

/// Half-open index range.
struct Range {
  std::size_t begin;
  std::size_t end;
  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin == end; }
};

/// Part `index` of `total` items split into `parts` contiguous ranges whose
/// sizes differ by at most one.
inline Range partition(std::size_t total, std::size_t parts, std::size_t index) noexcept {
  const std::size_t base = total / parts, extra = total % parts;
  const std::size_t begin = index * base + std::min(index, extra);
  return {begin, begin + base + (index < extra ? 1 : 0)};
}

/// Number of workers that keeps every worker at >= min_per_worker items
/// (at least one worker, at most `workers`).
inline std::size_t effective_workers(std::size_t total, std::size_t workers, std::size_t min_per_worker) noexcept {
  const std::size_t by_load = min_per_worker == 0 ? workers : total / min_per_worker;
  return std::clamp<std::size_t>(by_load, 1, std::max<std::size_t>(workers, 1));
}

/// Fixed team of W workers executing fork-join phases.
///
/// The calling thread acts as worker 0; W − 1 threads are spawned once and
/// live for the team's lifetime. Every worker takes part in every phase, and a
/// phase returns only after all workers have crossed the closing barrier, so
/// writes made inside a phase are visible to whatever runs next.
class WorkerTeam {
 public:
  explicit WorkerTeam(std::size_t workers)
      : workers_(workers), start_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(workers, 1))),
        finish_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(workers, 1))) {
    if (workers == 0) throw ConfigError("worker count must be at least 1");
    threads_.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) threads_.emplace_back([this, w] { worker_loop(w); });
  }

  WorkerTeam(const WorkerTeam&) = delete;
  WorkerTeam& operator=(const WorkerTeam&) = delete;

  ~WorkerTeam() {
    stopping_.store(true, std::memory_order_relaxed);
    if (!threads_.empty()) start_.arrive_and_wait();
    for (auto& t : threads_) t.join();
  }

  std::size_t size() const noexcept { return workers_; }

  /// Runs fn(worker_index) on every worker and waits for all of them.
  /// The first exception thrown by any worker is rethrown here.
  void run(const std::function<void(std::size_t)>& fn) {
    if (threads_.empty()) {
      fn(0);
      return;
    }
    task_ = &fn;
    start_.arrive_and_wait();
    execute(0);
    finish_.arrive_and_wait();
    task_ = nullptr;
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
  }

 private:
  void worker_loop(std::size_t w) {
    for (;;) {
      start_.arrive_and_wait();
      if (stopping_.load(std::memory_order_relaxed)) return;
      execute(w);
      finish_.arrive_and_wait();
    }
  }

  void execute(std::size_t w) noexcept {
    try {
      (*task_)(w);
    } catch (...) {
      std::lock_guard lock(error_mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  std::size_t workers_;
  std::barrier<> start_;
  std::barrier<> finish_;
  std::vector<std::thread> threads_;
  const std::function<void(std::size_t)>* task_ = nullptr;
  std::atomic<bool> stopping_{false};
  std::mutex error_mutex_;
  std::exception_ptr error_;
};

}  // namespace qapsa
