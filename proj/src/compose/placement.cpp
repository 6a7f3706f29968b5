#include "drpipe/compose/placement.hpp"

#include <algorithm>
#include <cmath>

#include "drpipe/core/error.hpp"
#include "drpipe/core/rotation.hpp"

namespace drpipe::compose {

void AnchorPolicy::validate() const {
  if (mode == ScaleMode::kFixedScale && !(fixed_scale > 0.0f && std::isfinite(fixed_scale))) {
    fail(ErrorCode::kInvalidConfig, "fixed scale must be positive");
  }
}

Placement map_pose(const core::Pose6D& real_pose, const Eigen::Vector3d& real_extent,
                   const Asset& asset, const AnchorPolicy& policy) {
  policy.validate();
  Placement out;
  out.pose.t = real_pose.t;
  out.pose.q = policy.align == AlignMode::kFullPose ? real_pose.q : core::Quatf{};
  out.pose.confidence = real_pose.confidence;
  if (policy.mode == ScaleMode::kFixedScale) {
    out.scale = policy.fixed_scale;
    return out;
  }
  if (!(real_extent.minCoeff() > 0.0) || !real_extent.allFinite()) {
    fail(ErrorCode::kZeroExtent, "fit_extent needs a positive real extent on every axis");
  }
  const Eigen::Vector3d ratio = real_extent.cwiseQuotient(asset.local_extent());
  out.scale = float(ratio.minCoeff());
  return out;
}

std::vector<CameraTriangle> place_triangles(const Mesh& mesh, const core::Pose6D& pose, double scale) {
  const Eigen::Matrix3d r = core::to_eigen(pose.q).normalized().toRotationMatrix();
  const Eigen::Vector3d t = core::to_eigen(pose.t);
  std::vector<Eigen::Vector3d> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = r * (scale * mesh.vertices[i]) + t;
  std::vector<CameraTriangle> tris;
  tris.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) tris.push_back({{cam[f.idx[0]], cam[f.idx[1]], cam[f.idx[2]]}, f.color});
  return tris;
}

RenderOutput render_asset(const core::Frame& base, const Asset& asset, const Placement& placement,
                          const core::PinholeIntrinsics& intr) {
  const std::uint32_t w = base.width();
  const std::uint32_t h = base.height();
  RasterBuffer raster(w, h);
  raster.draw(place_triangles(asset.mesh(), placement.pose, placement.scale), intr);

  std::vector<std::uint8_t> rgb(base.rgb().begin(), base.rgb().end());
  std::vector<std::uint16_t> sil(std::size_t(w) * h, 0);
  for (std::uint32_t y = 0; y < h; ++y) {
    for (std::uint32_t x = 0; x < w; ++x) {
      if (!raster.covered(x, y)) continue;
      const std::size_t i = std::size_t(y) * w + x;
      const core::Rgb c = raster.color(x, y);
      rgb[3 * i] = c.r;
      rgb[3 * i + 1] = c.g;
      rgb[3 * i + 2] = c.b;
      sil[i] = 1;
    }
  }
  return {base.with_rgb(std::move(rgb)), core::InstanceMask(w, h, std::move(sil))};
}

}  // namespace drpipe::compose
