#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

#include "drpipe/core/types.hpp"

namespace drpipe::pipeline {

struct SubmitOutcome {
  bool accepted = true;
  std::optional<std::uint64_t> dropped_id;  // oldest queued frame evicted to make room
};

struct SchedulerCounters {
  std::uint64_t received = 0;
  std::uint64_t processed = 0;  // frames handed to the pipeline
  std::uint64_t dropped = 0;
  std::uint64_t queued = 0;
};

// Bounded drop-oldest queue between one producer (the transport reader) and
// one consumer (the pipeline worker).
class Scheduler {
 public:
  explicit Scheduler(std::size_t capacity);

  SubmitOutcome submit(core::Frame frame);
  // Moves the oldest queued frame into `out`. take() blocks until a frame is
  // available and returns false once the scheduler is closed and drained.
  bool take(core::Frame& out);
  bool try_take(core::Frame& out);
  void close();

  SchedulerCounters counters() const;
  std::size_t capacity() const { return capacity_; }

 private:
  bool pop_locked(core::Frame& out);

  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<core::Frame> queue_;
  SchedulerCounters counters_;
  bool closed_ = false;
};

}  // namespace drpipe::pipeline
