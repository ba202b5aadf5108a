#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace funcnet {

/// Run fn(0..n_tasks-1) on up to n_threads workers. Tasks must write results
/// only into their own slots; the first exception (lowest task index) is
/// rethrown after all workers finish.
inline void parallel_for(int n_tasks, int n_threads, const std::function<void(int)>& fn) {
  if (n_tasks <= 0) return;
  if (n_threads <= 1 || n_tasks == 1) {
    for (int i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  const int workers = std::min(n_threads, n_tasks);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n_tasks);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (int i = 0; i < n_tasks; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
}

}  // namespace funcnet
