#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dgm {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs fn(idx) for idx in [0, count) on up to `threads` workers. Tasks must
// be independent and write only to their own slots; the first exception is
// rethrown on the calling thread after all workers finish.
template <typename Fn>
void parallel_for(long count, int threads, Fn&& fn) {
  const int workers = std::min<long>(resolve_threads(threads), count);
  if (workers <= 1) {
    for (long t = 0; t < count; ++t) fn(t);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr err;
  std::mutex err_mx;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const long t = next.fetch_add(1);
        if (t >= count) return;
        try {
          fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mx);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace dgm
