#ifndef BETHE_ADMM_PARALLEL_HPP
#define BETHE_ADMM_PARALLEL_HPP

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace bethe {

/// Fixed set of worker threads running one data-parallel loop at a time.
///
/// for_each(n, f) splits [0, n) into one contiguous block per worker (the
/// calling thread takes block 0) and returns once every block is done.
/// Block boundaries depend only on n and the thread count, never on timing.
class WorkerPool {
public:
  explicit WorkerPool(std::size_t threads)
  : size_(threads == 0 ? 1 : threads)
  {
    for (std::size_t w = 1; w < size_; ++w)
      workers_.emplace_back([this, w] { work(w); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool()
  {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    start_.notify_all();
    for (auto& t : workers_)
      t.join();
  }

  std::size_t size() const { return size_; }

  template<typename F>
  void for_each(std::size_t n, F&& f)
  {
    if (size_ == 1 || n < 2) {
      for (std::size_t i = 0; i < n; ++i)
        f(i);
      return;
    }
    {
      std::lock_guard lock(mutex_);
      job_ = [&f](std::size_t i) { f(i); };
      count_ = n;
      pending_ = size_ - 1;
      error_ = nullptr;
      ++generation_;
    }
    start_.notify_all();

    std::exception_ptr own;
    try {
      run_block(0);
    } catch (...) {
      own = std::current_exception();
    }

    std::unique_lock lock(mutex_);
    done_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
    if (own)
      std::rethrow_exception(own);
    if (error_)
      std::rethrow_exception(error_);
  }

private:
  void run_block(std::size_t w)
  {
    const std::size_t begin = count_ * w / size_;
    const std::size_t end = count_ * (w + 1) / size_;
    for (std::size_t i = begin; i < end; ++i)
      job_(i);
  }

  void work(std::size_t w)
  {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mutex_);
        start_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_)
          return;
        seen = generation_;
      }
      try {
        run_block(w);
      } catch (...) {
        std::lock_guard lock(mutex_);
        if (!error_)
          error_ = std::current_exception();
      }
      {
        std::lock_guard lock(mutex_);
        if (--pending_ == 0)
          done_.notify_one();
      }
    }
  }

  std::size_t size_;
  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable start_;
  std::condition_variable done_;
  std::function<void(std::size_t)> job_;
  std::size_t count_ = 0;
  std::size_t pending_ = 0;
  std::size_t generation_ = 0;
  std::exception_ptr error_;
  bool stop_ = false;
};

} // namespace bethe

#endif
