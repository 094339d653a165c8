#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace perov::detail {

/// Worker count from PEROV_THREADS (unset or 0 = hardware concurrency).
inline unsigned thread_count() {
  unsigned n = 0;
  if (const char* env = std::getenv("PEROV_THREADS")) n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs body(k) for k in [0, count). Each index is written by exactly one
/// worker, so results do not depend on scheduling.
template <typename Body>
void parallel_for(long count, Body&& body, long min_chunk = 64) {
  const long workers = std::min<long>(thread_count(), std::max<long>(1, count / min_chunk));
  if (workers <= 1) {
    for (long k = 0; k < count; ++k) body(k);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const long chunk = (count + workers - 1) / workers;
    for (long w = 0; w < workers; ++w) {
      const long lo = w * chunk;
      const long hi = std::min(count, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([lo, hi, &body, &failure, &failure_mutex] {
        try {
          for (long k = lo; k < hi; ++k) body(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  // Rethrown on the calling thread once every worker has joined.
  if (failure) std::rethrow_exception(failure);
}

}  // namespace perov::detail
