#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace drpipe::core {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Single-precision storage matches the wire format, so a value survives a
// trip through the protocol unchanged.
struct Vec3f {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;

  friend bool operator==(const Vec3f&, const Vec3f&) = default;
};

struct Quatf {
  float w = 1.0f;
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;

  friend bool operator==(const Quatf&, const Quatf&) = default;
};

inline constexpr double kUnitQuatTolerance = 1e-6;

struct PinholeIntrinsics {
  float fx = 1.0f;
  float fy = 1.0f;
  float cx = 0.0f;
  float cy = 0.0f;

  friend bool operator==(const PinholeIntrinsics&, const PinholeIntrinsics&) = default;

  // Throws InvalidArgument unless fx, fy > 0 and the principal point lies in
  // [0,width) x [0,height).
  void validate(std::uint32_t width, std::uint32_t height) const;
};

struct Pose6D {
  Vec3f t;
  Quatf q;
  float confidence = 1.0f;

  friend bool operator==(const Pose6D&, const Pose6D&) = default;

  void validate() const;
};

Pose6D identity_pose();

// Byte-level equality (distinguishes -0.0f from 0.0f).
bool bit_equal(const Pose6D& a, const Pose6D& b);

// Inclusive pixel rectangle.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  friend bool operator==(const PixelRect&, const PixelRect&) = default;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool empty() const { return x1 < x0 || y1 < y0; }
  std::size_t area() const { return empty() ? 0 : std::size_t(width()) * std::size_t(height()); }
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct FrameHeader {
  std::uint64_t frame_id = 0;
  std::uint64_t capture_ts_us = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  PinholeIntrinsics intrinsics;
  Pose6D camera_pose;

  friend bool operator==(const FrameHeader&, const FrameHeader&) = default;
};

inline constexpr std::uint32_t kMaxImageDim = 8192;

// Row-major RGB8 raster with an optional float32 depth plane in meters.
class Frame {
 public:
  // 0x0 placeholder; every constructed frame has positive dimensions.
  Frame() = default;
  Frame(FrameHeader header, std::vector<std::uint8_t> rgb,
        std::optional<std::vector<float>> depth = std::nullopt);

  const FrameHeader& header() const { return header_; }
  std::uint64_t frame_id() const { return header_.frame_id; }
  std::uint32_t width() const { return header_.width; }
  std::uint32_t height() const { return header_.height; }
  std::size_t pixel_count() const { return std::size_t(header_.width) * header_.height; }
  const PinholeIntrinsics& intrinsics() const { return header_.intrinsics; }
  const Pose6D& camera_pose() const { return header_.camera_pose; }

  std::span<const std::uint8_t> rgb() const { return rgb_; }
  bool has_depth() const { return depth_.has_value(); }
  std::span<const float> depth() const;

  Rgb pixel(std::uint32_t x, std::uint32_t y) const;

  // Same header and depth, new pixels.
  Frame with_rgb(std::vector<std::uint8_t> rgb) const;
  Frame with_header(FrameHeader header) const;

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  FrameHeader header_;
  std::vector<std::uint8_t> rgb_;
  std::optional<std::vector<float>> depth_;
};

// Per-pixel instance labels, 0 = background. instance_count is derived from
// the labels and the constructor rejects gaps in the 1..count range.
class InstanceMask {
 public:
  InstanceMask() = default;
  InstanceMask(std::uint32_t width, std::uint32_t height, std::vector<std::uint16_t> labels);

  static InstanceMask empty(std::uint32_t width, std::uint32_t height);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::uint16_t instance_count() const { return instance_count_; }
  std::span<const std::uint16_t> labels() const { return labels_; }
  std::uint16_t at(std::uint32_t x, std::uint32_t y) const { return labels_[std::size_t(y) * width_ + x]; }

  std::size_t count(std::uint16_t label) const;
  // Binary mask (label 1) holding only the pixels of `label`.
  InstanceMask isolate(std::uint16_t label) const;
  std::optional<PixelRect> bounding_box(std::uint16_t label) const;

  friend bool operator==(const InstanceMask&, const InstanceMask&) = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::uint16_t instance_count_ = 0;
  std::vector<std::uint16_t> labels_;
};

}  // namespace drpipe::core
