#pragma once

#include <cstdint>
#include <vector>

#include <doctest.h>

#include "drpipe/core/error.hpp"
#include "drpipe/core/types.hpp"

#define CHECK_ERROR_CODE(expr, expected_code)                                  \
  do {                                                                         \
    bool drpipe_threw_ = false;                                                \
    try {                                                                      \
      (void)(expr);                                                            \
    } catch (const ::drpipe::Error& drpipe_e_) {                               \
      drpipe_threw_ = true;                                                    \
      CHECK_MESSAGE(drpipe_e_.code() == (expected_code), drpipe_e_.what());    \
    }                                                                          \
    CHECK_MESSAGE(drpipe_threw_, "expected " #expected_code " from " #expr);   \
  } while (0)

namespace drpipe::testing {

inline core::FrameHeader header(std::uint32_t w, std::uint32_t h, std::uint64_t id = 0) {
  core::FrameHeader hd;
  hd.frame_id = id;
  hd.width = w;
  hd.height = h;
  hd.intrinsics = {200.0f, 200.0f, float(w) / 2.0f, float(h) / 2.0f};
  return hd;
}

inline core::Frame solid_frame(std::uint32_t w, std::uint32_t h, core::Rgb c, std::uint64_t id = 0) {
  std::vector<std::uint8_t> rgb(std::size_t(w) * h * 3);
  for (std::size_t i = 0; i < std::size_t(w) * h; ++i) {
    rgb[3 * i] = c.r;
    rgb[3 * i + 1] = c.g;
    rgb[3 * i + 2] = c.b;
  }
  return core::Frame(header(w, h, id), std::move(rgb));
}

inline void set_pixel(std::vector<std::uint8_t>& rgb, std::uint32_t w, std::uint32_t x, std::uint32_t y,
                      core::Rgb c) {
  const std::size_t i = (std::size_t(y) * w + x) * 3;
  rgb[i] = c.r;
  rgb[i + 1] = c.g;
  rgb[i + 2] = c.b;
}

}  // namespace drpipe::testing
