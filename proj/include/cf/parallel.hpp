// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cf {

/// 0 → hardware concurrency, otherwise the requested count (>= 1).
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs f(begin, end, chunk_index) over [0, n) split into fixed chunks.
/// Chunk boundaries depend only on (n, chunk_size), so callers that write
/// results into chunk-indexed slots get worker-count-independent output.
template <class F>
void parallel_chunks(size_t n, size_t chunk_size, int workers, F&& f) {
  if (n == 0) return;
  if (chunk_size == 0) chunk_size = 1;
  const size_t num_chunks = (n + chunk_size - 1) / chunk_size;
  workers = resolve_workers(workers);
  if (workers == 1 || num_chunks == 1) {
    for (size_t c = 0; c < num_chunks; ++c) {
      size_t b = c * chunk_size;
      f(b, std::min(n, b + chunk_size), c);
    }
    return;
  }

  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      size_t c = next.fetch_add(1);
      if (c >= num_chunks) return;
      try {
        size_t b = c * chunk_size;
        f(b, std::min(n, b + chunk_size), c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  size_t nthreads = std::min<size_t>(static_cast<size_t>(workers), num_chunks);
  pool.reserve(nthreads);
  for (size_t i = 0; i < nthreads; ++i) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cf
