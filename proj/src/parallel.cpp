#include "bzmarble/parallel.hpp"

namespace bzmarble {

namespace {

void band_bounds(unsigned band, unsigned bands, int rows, int& begin, int& end) {
  const long r = rows;
  begin = static_cast<int>(r * band / bands);
  end = static_cast<int>(r * (band + 1) / bands);
}

}  // namespace

RowBandPool::RowBandPool(unsigned threads) {
  if (threads == 0) threads = 1;
  workers_.reserve(threads - 1);
  for (unsigned i = 1; i < threads; ++i) {
    workers_.emplace_back([this, i] { worker_loop(i); });
  }
}

RowBandPool::~RowBandPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& w : workers_) w.join();
}

void RowBandPool::run(int rows, const std::function<void(unsigned, int, int)>& fn) {
  const unsigned bands = threads();
  if (bands == 1) {
    fn(0, 0, rows);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    job_ = &fn;
    rows_ = rows;
    pending_ = bands - 1;
    ++generation_;
  }
  start_cv_.notify_all();

  int begin = 0;
  int end = 0;
  band_bounds(0, bands, rows, begin, end);
  fn(0, begin, end);

  std::unique_lock lock(mutex_);
  done_cv_.wait(lock, [this] { return pending_ == 0; });
  job_ = nullptr;
}

void RowBandPool::worker_loop(unsigned index) {
  unsigned long seen = 0;
  for (;;) {
    const std::function<void(unsigned, int, int)>* job = nullptr;
    int rows = 0;
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      rows = rows_;
    }
    int begin = 0;
    int end = 0;
    band_bounds(index, threads(), rows, begin, end);
    (*job)(index, begin, end);
    {
      std::lock_guard lock(mutex_);
      --pending_;
    }
    done_cv_.notify_one();
  }
}

}  // namespace bzmarble
