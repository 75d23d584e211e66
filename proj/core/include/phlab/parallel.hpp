#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace phlab {

/// Runs body(task) for task in [0, tasks) on up to `workers` threads. Tasks
/// are claimed from a shared counter; callers write results into per-task
/// slots and reduce them in task order, which keeps output independent of the
/// worker count. The first exception thrown by any task is rethrown.
template <class Body>
void parallel_for(std::size_t tasks, int workers, Body&& body) {
  const std::size_t n_threads =
      std::min<std::size_t>(tasks, static_cast<std::size_t>(std::max(1, workers)));
  if (n_threads <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) body(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      try {
        body(t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads - 1);
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace phlab
