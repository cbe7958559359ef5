#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace estcorpus {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
// written to per-index slots; the first exception is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(body);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace estcorpus
