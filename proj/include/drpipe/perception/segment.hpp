#pragma once

#include <cstdint>
#include <vector>

#include "drpipe/core/types.hpp"

namespace drpipe::perception {

// Chroma-key target description. `instance_id` is the label of the segmented
// component that the pipeline treats as the target object.
struct TargetSpec {
  std::vector<core::Rgb> key_colors;
  std::uint8_t tolerance = 12;
  std::uint16_t instance_id = 1;
  std::uint32_t min_instance_px = 16;

  friend bool operator==(const TargetSpec&, const TargetSpec&) = default;

  void validate() const;
};

// Matches pixels within `tolerance` (Chebyshev) of any key color, groups them
// into 4-connected components, drops components below min_instance_px and
// labels the survivors 1..k by their first pixel in row-major order.
core::InstanceMask segment(const core::Frame& frame, const TargetSpec& spec);

}  // namespace drpipe::perception
