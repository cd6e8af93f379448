#include "mrlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace mrlab::parallel {

namespace {
std::atomic<unsigned> g_workers{1};
}

unsigned workers() { return g_workers.load(); }

void set_workers(unsigned n) { g_workers.store(std::max(1u, n)); }

void for_each_index(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(workers(), count));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mrlab::parallel
