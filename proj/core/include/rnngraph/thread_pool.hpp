#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rnngraph {

/// Fixed-size pool for fork/join loops issued from a single coordinator
/// thread. The calling thread takes part in the work.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t threads);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t size() const { return workers_.size() + 1; }

  /// Splits [0, n) into at most size() contiguous ranges and runs
  /// fn(begin, end) on each; returns when all ranges are done.
  void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

  static std::size_t hardware_threads();

 private:
  void worker_loop(std::size_t slot);

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t, std::size_t)>* job_ = nullptr;
  std::size_t job_size_ = 0;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stop_ = false;
};

/// Runs fn over [0, n) on the pool, or inline when pool is null or the
/// work is too small to split.
void parallel_for(ThreadPool* pool, std::size_t n, std::size_t min_grain,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace rnngraph
