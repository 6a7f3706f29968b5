#pragma once

#include <array>

#include "drpipe/core/types.hpp"

namespace drpipe::core {

// Saturated face colors of the default target box, ordered +x,-x,+y,-y,+z,-z.
// Also the default chroma-key set of a session.
inline constexpr std::array<Rgb, 6> kDefaultFaceColors = {{
    {220, 30, 30},
    {30, 200, 40},
    {40, 60, 220},
    {230, 210, 20},
    {210, 40, 200},
    {30, 200, 210},
}};

}  // namespace drpipe::core
