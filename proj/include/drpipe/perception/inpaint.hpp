#pragma once

#include <cstdint>

#include "drpipe/core/types.hpp"

namespace drpipe::perception {

struct InpaintQuality {
  enum class Mode { kFast, kConverged };

  Mode mode = Mode::kFast;
  std::uint32_t iters = 64;
  double tol = 1e-4;
  // Safety stop for converged mode.
  std::uint32_t max_iters = 200000;

  static InpaintQuality fast(std::uint32_t iters = 64) { return {Mode::kFast, iters, 1e-4, 200000}; }
  static InpaintQuality converged(double tol = 1e-4) { return {Mode::kConverged, 0, tol, 200000}; }

  friend bool operator==(const InpaintQuality&, const InpaintQuality&) = default;
};

// Harmonic fill of every non-zero label. Each 4-connected hole component is
// initialised to the mean of its boundary pixels and relaxed with Jacobi
// sweeps over its bounding box plus a one-pixel margin.
core::Frame inpaint(const core::Frame& frame, const core::InstanceMask& mask, const InpaintQuality& quality);

}  // namespace drpipe::perception
