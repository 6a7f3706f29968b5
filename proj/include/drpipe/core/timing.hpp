#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string_view>

namespace drpipe::core {

struct LatencyBudget {
  double target_fps = 30.0;
  std::uint64_t budget_us = 33333;

  friend bool operator==(const LatencyBudget&, const LatencyBudget&) = default;
};

// budget_us = round(1e6 / fps). Throws NonPositiveFps.
LatencyBudget budget_for_fps(double fps);

enum class Stage : std::size_t {
  kGate2d,
  kSegment,
  kInpaint,
  kGate3d,
  kPoseCoarse,
  kPoseRefine,
  kCompose,
  kTransportUp,
  kTransportDown,
  kTotal,
};

inline constexpr std::size_t kStageCount = 10;

std::string_view stage_name(Stage s);
std::optional<Stage> stage_from_name(std::string_view name);

// Skipped stages stay absent rather than reading zero.
class StageTimings {
 public:
  void set(Stage s, std::uint64_t us) { values_[std::size_t(s)] = us; }
  void clear(Stage s) { values_[std::size_t(s)].reset(); }
  std::optional<std::uint64_t> get(Stage s) const { return values_[std::size_t(s)]; }
  bool has(Stage s) const { return values_[std::size_t(s)].has_value(); }
  std::size_t present_count() const;

  friend bool operator==(const StageTimings&, const StageTimings&) = default;

 private:
  std::array<std::optional<std::uint64_t>, kStageCount> values_{};
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::uint64_t elapsed_us() const {
    return std::uint64_t(std::chrono::duration_cast<std::chrono::microseconds>(
                             std::chrono::steady_clock::now() - start_)
                             .count());
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace drpipe::core
