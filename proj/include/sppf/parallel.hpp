#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sppf {

// Effective worker count: `requested` (0 = hardware), capped by the
// SPARSE_PPF_THREADS environment variable when set.
int resolve_threads(int requested);

// Runs work(0..n-1) on a worker pool and feeds each result to consume() in
// index order, so reductions are deterministic regardless of the worker
// count. At most one buffer per worker is in flight.
template <typename Buf>
void ordered_parallel(long n, int threads,
                      const std::function<Buf(long)>& work,
                      const std::function<void(long, Buf&)>& consume) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) {
      Buf b = work(i);
      consume(i, b);
    }
    return;
  }

  std::mutex mu;
  std::condition_variable cv;
  long next_item = 0;     // next index to hand out
  long next_consume = 0;  // next index to feed to consume()
  std::exception_ptr error;

  auto runner = [&] {
    for (;;) {
      long i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (error || next_item >= n) return;
        i = next_item++;
      }
      Buf b;
      try {
        b = work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        cv.notify_all();
        return;
      }
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return error || next_consume == i; });
      if (error) return;
      try {
        consume(i, b);
      } catch (...) {
        if (!error) error = std::current_exception();
      }
      ++next_consume;
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(runner);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace sppf
