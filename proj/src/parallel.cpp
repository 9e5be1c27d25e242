#include "bipnet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bipnet {

namespace {

std::size_t default_threads() {
  if (const char* env = std::getenv("BIPNET_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::atomic<std::size_t> g_threads{0};
thread_local bool t_in_worker = false;

}  // namespace

std::size_t thread_count() {
  std::size_t t = g_threads.load();
  if (t == 0) {
    t = default_threads();
    g_threads.store(t);
  }
  return t;
}

void set_thread_count(std::size_t threads) { g_threads.store(std::max<std::size_t>(1, threads)); }

void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(thread_count(), tasks);
  if (workers <= 1 || t_in_worker) {
    for (std::size_t t = 0; t < tasks; ++t) body(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    t_in_worker = true;
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks) break;
      try {
        body(t);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(tasks);
      }
    }
    t_in_worker = false;
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace bipnet
