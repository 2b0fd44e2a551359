#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fmlp {

/// Runs job(i) for i in [0, count) on at most `workers` threads. Jobs write
/// to their own slots, so results do not depend on scheduling. The first
/// exception (by job index) is rethrown after all workers finish.
template <class Job>
void parallel_for(std::size_t count, unsigned workers, Job&& job) {
  const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = count;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace fmlp
