#include "geofuse/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>

namespace geofuse {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads.store(n < 1 ? 1 : n); }
int thread_count() { return g_threads.load(); }

void parallel_rows(int height, const std::function<void(int)>& fn) {
  const int workers = std::min(thread_count(), height);
  if (workers <= 1) {
    for (int y = 0; y < height; ++y) fn(y);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (height + workers - 1) / workers;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    const int y0 = w * chunk;
    const int y1 = std::min(height, y0 + chunk);
    if (y0 >= y1) break;
    pool.emplace_back([&fn, &error, &error_mutex, y0, y1] {
      try {
        for (int y = y0; y < y1; ++y) fn(y);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace geofuse
