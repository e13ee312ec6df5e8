#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace pimfit {

// Runs fn(task_index) for task_index in [0, n_tasks) on a bounded pool.
// Each task writes only its own output slot and failures are re-examined in
// task order after the join, so outcomes do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n_tasks, int workers, Fn&& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n_tasks <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::vector<std::exception_ptr> errors(n_tasks);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= n_tasks) return;
      try {
        fn(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), n_tasks));
  pool.reserve(static_cast<std::size_t>(spawn));
  for (int w = 0; w < spawn; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  for (std::size_t t = 0; t < n_tasks; ++t) {
    if (errors[t]) std::rethrow_exception(errors[t]);
  }
}

}  // namespace pimfit
