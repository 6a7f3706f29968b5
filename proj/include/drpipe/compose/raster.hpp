#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "drpipe/core/types.hpp"

namespace drpipe::compose {

inline constexpr double kNearPlane = 0.01;

struct CameraTriangle {
  std::array<Eigen::Vector3d, 3> v;
  core::Rgb color;
};

// Flat-shaded z-buffered triangle rasterizer in camera space.
//
// Pixel (x,y) is sampled at the integer coordinate (x,y), the same convention
// back-projection uses. Edges follow the top-left rule; triangles are clipped
// against z = kNearPlane. A write happens only when the interpolated depth is
// strictly less than the stored one, so among equal depths the first draw wins.
class RasterBuffer {
 public:
  RasterBuffer(std::uint32_t width, std::uint32_t height,
               double initial_depth = std::numeric_limits<double>::infinity());

  void draw(const CameraTriangle& tri, const core::PinholeIntrinsics& intr);
  void draw(std::span<const CameraTriangle> tris, const core::PinholeIntrinsics& intr);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  bool covered(std::uint32_t x, std::uint32_t y) const { return covered_[index(x, y)] != 0; }
  double depth(std::uint32_t x, std::uint32_t y) const { return depth_[index(x, y)]; }
  core::Rgb color(std::uint32_t x, std::uint32_t y) const { return color_[index(x, y)]; }
  std::size_t covered_count() const;

 private:
  std::size_t index(std::uint32_t x, std::uint32_t y) const { return std::size_t(y) * width_ + x; }
  void fill_projected(const std::array<Eigen::Vector3d, 3>& screen, core::Rgb color);

  std::uint32_t width_;
  std::uint32_t height_;
  std::vector<double> depth_;
  std::vector<core::Rgb> color_;
  std::vector<std::uint8_t> covered_;
};

// Sutherland-Hodgman against z >= kNearPlane; returns 0, 3 or 4 vertices.
std::vector<Eigen::Vector3d> clip_near(const std::array<Eigen::Vector3d, 3>& tri);

}  // namespace drpipe::compose
