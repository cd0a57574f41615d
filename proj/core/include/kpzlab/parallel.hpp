#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kpzlab {

/// Worker count from KPZLAB_THREADS, falling back to the hardware concurrency.
int default_thread_count();

/// Evaluates fn(i) for i in [0, count) on `threads` workers and returns the
/// results in index order. Each index is computed by exactly one call, so the
/// output does not depend on the schedule.
template <class Result, class Fn>
std::vector<Result> map_replicas(std::size_t count, int threads, Fn&& fn) {
  std::vector<Result> out(count);
  if (threads <= 0) threads = default_thread_count();
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace kpzlab
