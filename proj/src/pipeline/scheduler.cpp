#include "drpipe/pipeline/scheduler.hpp"

#include "drpipe/core/error.hpp"

namespace drpipe::pipeline {

Scheduler::Scheduler(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) fail(ErrorCode::kInvalidConfig, "scheduler capacity must be >= 1");
}

SubmitOutcome Scheduler::submit(core::Frame frame) {
  SubmitOutcome out;
  {
    std::lock_guard lock(mu_);
    ++counters_.received;
    if (queue_.size() >= capacity_) {
      out.dropped_id = queue_.front().frame_id();
      queue_.pop_front();
      ++counters_.dropped;
    }
    queue_.push_back(std::move(frame));
    counters_.queued = queue_.size();
  }
  cv_.notify_one();
  return out;
}

bool Scheduler::pop_locked(core::Frame& out) {
  if (queue_.empty()) return false;
  out = std::move(queue_.front());
  queue_.pop_front();
  ++counters_.processed;
  counters_.queued = queue_.size();
  return true;
}

bool Scheduler::take(core::Frame& out) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return closed_ || !queue_.empty(); });
  return pop_locked(out);
}

bool Scheduler::try_take(core::Frame& out) {
  std::lock_guard lock(mu_);
  return pop_locked(out);
}

void Scheduler::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

SchedulerCounters Scheduler::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

}  // namespace drpipe::pipeline
