#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qavg {

/**
 * Runs fn(i) for i in [0, n) on a fixed pool of worker threads and returns
 * the results in index order. Workers pull indices from a shared counter;
 * since every result lands in its own slot, callers that reduce the returned
 * vector sequentially get output independent of the thread count.
 * The first exception thrown by any task is rethrown after all workers join.
 */
template <typename Fn>
auto run_indexed(std::size_t n, unsigned threads, Fn&& fn) {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> results(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };

  unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

/// Hardware concurrency with a floor of one.
inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace qavg
