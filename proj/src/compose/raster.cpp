#include "drpipe/compose/raster.hpp"

#include <algorithm>
#include <cmath>

#include "drpipe/core/error.hpp"

namespace drpipe::compose {

namespace {

double edge(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// Top or left edge for a positively oriented triangle in y-down screen space.
bool is_top_left(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

bool owns(double w, bool top_left) { return w > 0.0 || (w == 0.0 && top_left); }

}  // namespace

std::vector<Eigen::Vector3d> clip_near(const std::array<Eigen::Vector3d, 3>& tri) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(4);
  for (std::size_t i = 0; i < 3; ++i) {
    const Eigen::Vector3d& a = tri[i];
    const Eigen::Vector3d& b = tri[(i + 1) % 3];
    const bool a_in = a.z() >= kNearPlane;
    const bool b_in = b.z() >= kNearPlane;
    if (a_in) out.push_back(a);
    if (a_in != b_in) {
      const double t = (kNearPlane - a.z()) / (b.z() - a.z());
      Eigen::Vector3d p = a + t * (b - a);
      p.z() = kNearPlane;
      out.push_back(p);
    }
  }
  return out;
}

RasterBuffer::RasterBuffer(std::uint32_t width, std::uint32_t height, double initial_depth)
    : width_(width),
      height_(height),
      depth_(std::size_t(width) * height, initial_depth),
      color_(std::size_t(width) * height),
      covered_(std::size_t(width) * height, 0) {
  if (width == 0 || height == 0) fail(ErrorCode::kInvalidArgument, "empty raster");
}

void RasterBuffer::draw(std::span<const CameraTriangle> tris, const core::PinholeIntrinsics& intr) {
  for (const auto& t : tris) draw(t, intr);
}

void RasterBuffer::draw(const CameraTriangle& tri, const core::PinholeIntrinsics& intr) {
  const auto poly = clip_near(tri.v);
  if (poly.size() < 3) return;
  std::vector<Eigen::Vector3d> screen(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    screen[i] = {double(intr.fx) * p.x() / p.z() + double(intr.cx),
                 double(intr.fy) * p.y() / p.z() + double(intr.cy), p.z()};
  }
  for (std::size_t i = 1; i + 1 < screen.size(); ++i) {
    fill_projected({screen[0], screen[i], screen[i + 1]}, tri.color);
  }
}

void RasterBuffer::fill_projected(const std::array<Eigen::Vector3d, 3>& s, core::Rgb color) {
  Eigen::Vector3d p0 = s[0], p1 = s[1], p2 = s[2];
  double area = edge(p0, p1, p2.x(), p2.y());
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0.0) {
    std::swap(p1, p2);
    area = -area;
  }

  const double min_x = std::min({p0.x(), p1.x(), p2.x()});
  const double max_x = std::max({p0.x(), p1.x(), p2.x()});
  const double min_y = std::min({p0.y(), p1.y(), p2.y()});
  const double max_y = std::max({p0.y(), p1.y(), p2.y()});
  const double x_lo = std::max(0.0, std::ceil(min_x));
  const double x_hi = std::min(double(width_) - 1.0, std::floor(max_x));
  const double y_lo = std::max(0.0, std::ceil(min_y));
  const double y_hi = std::min(double(height_) - 1.0, std::floor(max_y));
  if (x_lo > x_hi || y_lo > y_hi) return;

  const bool tl0 = is_top_left(p1, p2);
  const bool tl1 = is_top_left(p2, p0);
  const bool tl2 = is_top_left(p0, p1);
  const double inv_z0 = 1.0 / p0.z();
  const double inv_z1 = 1.0 / p1.z();
  const double inv_z2 = 1.0 / p2.z();

  for (int y = int(y_lo); y <= int(y_hi); ++y) {
    for (int x = int(x_lo); x <= int(x_hi); ++x) {
      const double w0 = edge(p1, p2, x, y);
      const double w1 = edge(p2, p0, x, y);
      const double w2 = edge(p0, p1, x, y);
      if (!owns(w0, tl0) || !owns(w1, tl1) || !owns(w2, tl2)) continue;
      // Perspective-correct depth: 1/z is affine in screen space.
      const double inv_z = (w0 * inv_z0 + w1 * inv_z1 + w2 * inv_z2) / area;
      const double z = 1.0 / inv_z;
      const std::size_t i = index(std::uint32_t(x), std::uint32_t(y));
      if (z < depth_[i]) {
        depth_[i] = z;
        color_[i] = color;
        covered_[i] = 1;
      }
    }
  }
}

std::size_t RasterBuffer::covered_count() const {
  return std::size_t(std::count(covered_.begin(), covered_.end(), std::uint8_t(1)));
}

}  // namespace drpipe::compose
