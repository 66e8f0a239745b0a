#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace bzmarble {

/// Persistent worker pool that splits a row range into contiguous bands.
///
/// Each band is handed to exactly one thread; callers guarantee that a row's
/// output depends only on inputs, so results are independent of the thread
/// count. With one thread everything runs inline on the caller.
class RowBandPool {
 public:
  explicit RowBandPool(unsigned threads = 1);
  ~RowBandPool();

  RowBandPool(const RowBandPool&) = delete;
  RowBandPool& operator=(const RowBandPool&) = delete;

  unsigned threads() const noexcept { return static_cast<unsigned>(workers_.size()) + 1; }

  /// Calls fn(band_index, row_begin, row_end) once per band and waits.
  /// Band i covers rows [i*rows/n, (i+1)*rows/n).
  void run(int rows, const std::function<void(unsigned, int, int)>& fn);

 private:
  void worker_loop(unsigned index);

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(unsigned, int, int)>* job_ = nullptr;
  int rows_ = 0;
  unsigned long generation_ = 0;
  unsigned pending_ = 0;
  bool stop_ = false;
};

}  // namespace bzmarble
