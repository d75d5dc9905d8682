#include "rnngraph/thread_pool.hpp"

#include <algorithm>

namespace rnngraph {

namespace {

std::pair<std::size_t, std::size_t> split(std::size_t n, std::size_t parts, std::size_t slot) {
  const std::size_t base = n / parts, extra = n % parts;
  const std::size_t begin = slot * base + std::min(slot, extra);
  return {begin, begin + base + (slot < extra ? 1 : 0)};
}

}  // namespace

ThreadPool::ThreadPool(std::size_t threads) {
  const std::size_t extra = threads > 1 ? threads - 1 : 0;
  workers_.reserve(extra);
  for (std::size_t i = 0; i < extra; ++i) workers_.emplace_back([this, i] { worker_loop(i + 1); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& t : workers_) t.join();
}

std::size_t ThreadPool::hardware_threads() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void ThreadPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t, std::size_t)>& fn) {
  if (workers_.empty() || n < 2) {
    if (n) fn(0, n);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    job_ = &fn;
    job_size_ = n;
    pending_ = workers_.size();
    ++generation_;
  }
  wake_.notify_all();
  const auto [begin, end] = split(n, size(), 0);
  if (begin < end) fn(begin, end);
  std::unique_lock lock(mutex_);
  done_.wait(lock, [this] { return pending_ == 0; });
  job_ = nullptr;
}

void ThreadPool::worker_loop(std::size_t slot) {
  std::size_t seen = 0;
  for (;;) {
    const std::function<void(std::size_t, std::size_t)>* job;
    std::size_t n;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      n = job_size_;
    }
    const auto [begin, end] = split(n, size(), slot);
    if (begin < end) (*job)(begin, end);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_.notify_one();
    }
  }
}

void parallel_for(ThreadPool* pool, std::size_t n, std::size_t min_grain,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  if (!pool || pool->size() < 2 || n < 2 * std::max<std::size_t>(min_grain, 1)) {
    if (n) fn(0, n);
    return;
  }
  pool->parallel_for(n, fn);
}

}  // namespace rnngraph
