#pragma once

// Fixed-size worker pool over an indexed task list. Results are stored by
// task index, so output order does not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace liftrec::cli {

// Runs fn(0), ..., fn(count - 1) on up to `jobs` threads. The first
// exception thrown by a task is rethrown after all workers stop.
template <class R>
std::vector<R> parallel_map(int count, int jobs, const std::function<R(int)>& fn) {
  std::vector<R> results(static_cast<std::size_t>(std::max(count, 0)));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int k = next++; k < count; k = next++) {
      try {
        results[static_cast<std::size_t>(k)] = fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace liftrec::cli
