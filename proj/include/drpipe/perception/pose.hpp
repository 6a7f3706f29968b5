#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "drpipe/core/types.hpp"

namespace drpipe::perception {

struct PoseFeatures {
  core::Vec3f centroid_cam;
  core::Vec3f extent_cam;
  std::uint32_t mask_area_px = 0;

  friend bool operator==(const PoseFeatures&, const PoseFeatures&) = default;
};

// Camera-space points of the pixels labelled `instance` that carry a finite,
// positive depth. Throws NoDepth and EmptyInstance.
std::vector<Eigen::Vector3d> backproject(const core::Frame& frame, const core::InstanceMask& mask,
                                         std::uint16_t instance);

// Centroid and axis-aligned extent of the back-projected instance.
PoseFeatures pose_coarse(const core::Frame& frame, const core::InstanceMask& mask, std::uint16_t instance);

// Principal-axes orientation; translation is the coarse centroid.
core::Pose6D pose_refine(const PoseFeatures& features, const core::Frame& frame, const core::InstanceMask& mask,
                         std::uint16_t instance);
core::Pose6D pose_from_points(const PoseFeatures& features, const std::vector<Eigen::Vector3d>& points);

// Extent of the instance's points measured along the axes of `pose`. Axes with
// less than kMinObservableExtent of spread (a flat visible surface) take the
// smallest observable extent instead, so the result is usable for scaling.
inline constexpr double kMinObservableExtent = 1e-3;
Eigen::Vector3d observed_extent(const std::vector<Eigen::Vector3d>& points, const core::Pose6D& pose);

}  // namespace drpipe::perception
