#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nmodes {

/// Worker cap: min(NMODES_THREADS, hardware concurrency); at least 1.
inline int thread_budget() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("NMODES_THREADS")) {
    char* end = nullptr;
    const long req = std::strtol(env, &end, 10);
    if (end != env && req >= 1 && req < hw) return static_cast<int>(req);
  }
  return hw;
}

/**
 * Run fn(0..n-1) across the thread budget with dynamic index dispatch.
 * The first exception wins and is rethrown on the calling thread after all
 * workers join; fn must be safe to call concurrently for distinct indices.
 */
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(thread_budget(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nmodes
