#pragma once

#include <vector>

#include <Eigen/Core>

#include "drpipe/compose/asset.hpp"
#include "drpipe/compose/raster.hpp"
#include "drpipe/core/types.hpp"

namespace drpipe::compose {

enum class ScaleMode { kFitExtent, kFixedScale };
enum class AlignMode { kFullPose, kTranslationOnly };

struct AnchorPolicy {
  ScaleMode mode = ScaleMode::kFitExtent;
  float fixed_scale = 1.0f;
  AlignMode align = AlignMode::kFullPose;

  friend bool operator==(const AnchorPolicy&, const AnchorPolicy&) = default;

  void validate() const;
};

struct Placement {
  core::Pose6D pose;  // asset frame -> camera frame
  float scale = 1.0f;

  friend bool operator==(const Placement&, const Placement&) = default;
};

// Real object pose/extent -> asset placement. fit_extent uses the uniform
// scale min_i(real_extent_i / asset_extent_i); throws ZeroExtent when an axis
// of real_extent is not positive in that mode.
Placement map_pose(const core::Pose6D& real_pose, const Eigen::Vector3d& real_extent,
                   const Asset& asset, const AnchorPolicy& policy);

std::vector<CameraTriangle> place_triangles(const Mesh& mesh, const core::Pose6D& pose, double scale);

struct RenderOutput {
  core::Frame frame;
  core::InstanceMask silhouette;
};

// Rasterizes the asset and replaces only the pixels it covers.
RenderOutput render_asset(const core::Frame& base, const Asset& asset, const Placement& placement,
                          const core::PinholeIntrinsics& intr);

}  // namespace drpipe::compose
