#include "drpipe/core/timing.hpp"

#include <cmath>
#include <string>

#include "drpipe/core/error.hpp"

namespace drpipe::core {

LatencyBudget budget_for_fps(double fps) {
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    fail(ErrorCode::kNonPositiveFps, "fps = " + std::to_string(fps));
  }
  return LatencyBudget{fps, std::uint64_t(std::llround(1e6 / fps))};
}

namespace {
constexpr std::array<std::string_view, kStageCount> kStageNames = {
    "gate2d",      "segment",      "inpaint",        "gate3d", "pose_coarse",
    "pose_refine", "compose",      "transport_up",   "transport_down", "total",
};
}  // namespace

std::string_view stage_name(Stage s) { return kStageNames[std::size_t(s)]; }

std::optional<Stage> stage_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStageCount; ++i) {
    if (kStageNames[i] == name) return Stage(i);
  }
  return std::nullopt;
}

std::size_t StageTimings::present_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.has_value();
  return n;
}

}  // namespace drpipe::core
