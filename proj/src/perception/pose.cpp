#include "drpipe/perception/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "drpipe/core/error.hpp"
#include "drpipe/core/rotation.hpp"

namespace drpipe::perception {

std::vector<Eigen::Vector3d> backproject(const core::Frame& frame, const core::InstanceMask& mask,
                                         std::uint16_t instance) {
  if (!frame.has_depth()) fail(ErrorCode::kNoDepth, "frame " + std::to_string(frame.frame_id()) + " has no depth");
  if (mask.width() != frame.width() || mask.height() != frame.height()) {
    fail(ErrorCode::kDimMismatch, "mask and frame dimensions differ");
  }
  const auto& k = frame.intrinsics();
  const auto depth = frame.depth();
  const auto labels = mask.labels();
  std::vector<Eigen::Vector3d> pts;
  bool any = false;
  for (std::uint32_t v = 0; v < frame.height(); ++v) {
    for (std::uint32_t u = 0; u < frame.width(); ++u) {
      const std::size_t i = std::size_t(v) * frame.width() + u;
      if (labels[i] != instance) continue;
      any = true;
      const double d = depth[i];
      if (!std::isfinite(d) || d <= 0.0) continue;
      pts.emplace_back((double(u) - k.cx) / k.fx * d, (double(v) - k.cy) / k.fy * d, d);
    }
  }
  if (!any) fail(ErrorCode::kEmptyInstance, "instance " + std::to_string(instance) + " not in mask");
  if (pts.empty()) fail(ErrorCode::kDegenerateDepth, "instance has no valid depth samples");
  return pts;
}

namespace {

PoseFeatures features_of(const std::vector<Eigen::Vector3d>& pts) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& p : pts) {
    sum += p;
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  PoseFeatures f;
  f.centroid_cam = core::to_vec3f(sum / double(pts.size()));
  f.extent_cam = core::to_vec3f(hi - lo);
  f.mask_area_px = std::uint32_t(pts.size());
  return f;
}

}  // namespace

PoseFeatures pose_coarse(const core::Frame& frame, const core::InstanceMask& mask, std::uint16_t instance) {
  return features_of(backproject(frame, mask, instance));
}

core::Pose6D pose_from_points(const PoseFeatures& features, const std::vector<Eigen::Vector3d>& pts) {
  if (pts.size() < 3) fail(ErrorCode::kDegenerateGeometry, "need at least 3 points");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= double(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    const Eigen::Vector3d d = p - mean;
    cov += d * d.transpose();
  }
  cov /= double(pts.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Eigen::Vector3d lambda = solver.eigenvalues();  // ascending
  if (!(lambda(2) > 1e-18) || lambda(1) <= 1e-9 * lambda(2)) {
    fail(ErrorCode::kDegenerateGeometry, "points do not span two dimensions");
  }
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d col = solver.eigenvectors().col(2 - i);
    if (col(i) < 0.0) col = -col;
    r.col(i) = col;
  }
  r.col(2) = r.col(0).cross(r.col(1)).normalized();

  core::Pose6D pose;
  pose.t = features.centroid_cam;
  pose.q = core::to_quatf(Eigen::Quaterniond(r));
  const double area = features.mask_area_px;
  pose.confidence = float(area / (area + 64.0));
  return pose;
}

core::Pose6D pose_refine(const PoseFeatures& features, const core::Frame& frame, const core::InstanceMask& mask,
                         std::uint16_t instance) {
  return pose_from_points(features, backproject(frame, mask, instance));
}

Eigen::Vector3d observed_extent(const std::vector<Eigen::Vector3d>& pts, const core::Pose6D& pose) {
  const Eigen::Matrix3d rt = core::to_eigen(pose.q).toRotationMatrix().transpose();
  const Eigen::Vector3d t = core::to_eigen(pose.t);
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& p : pts) {
    const Eigen::Vector3d l = rt * (p - t);
    lo = lo.cwiseMin(l);
    hi = hi.cwiseMax(l);
  }
  Eigen::Vector3d e = hi - lo;
  double smallest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (e(i) >= kMinObservableExtent) smallest = std::min(smallest, e(i));
  }
  if (std::isfinite(smallest)) {
    for (int i = 0; i < 3; ++i) {
      if (e(i) < kMinObservableExtent) e(i) = smallest;
    }
  }
  return e;
}

}  // namespace drpipe::perception
