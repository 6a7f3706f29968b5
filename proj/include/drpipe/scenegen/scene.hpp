#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "drpipe/core/palette.hpp"
#include "drpipe/core/types.hpp"

namespace drpipe::scenegen {

enum class BackgroundKind { kCheckerboard, kGradient, kNoiseTexture };

// Distance of the textured background plane in front of the camera.
inline constexpr float kBackgroundDepth = 10.0f;

struct BoxObject {
  Eigen::Vector3d extents{0.4, 0.25, 0.1};
  std::array<core::Rgb, 6> face_colors = core::kDefaultFaceColors;

  void validate() const;
  // {identity, Rx(pi), Ry(pi), Rz(pi)}
  static std::vector<core::Quatf> symmetry_group();
};

struct StaticTrajectory {
  core::Pose6D pose;
};
struct LinearTrajectory {
  core::Pose6D start;
  core::Pose6D end;
};
// Circle of radius_m in the plane y = center.y; phase i * speed.
struct OrbitTrajectory {
  core::Vec3f center;
  double radius_m = 0.3;
  double angular_speed_deg_per_frame = 2.0;
  core::Quatf rotation;
};
using Trajectory = std::variant<StaticTrajectory, LinearTrajectory, OrbitTrajectory>;

struct StaticCamera {
  core::Pose6D pose;
};
struct LinearCamera {
  core::Pose6D start;
  core::Pose6D end;
};
using CameraMotion = std::variant<StaticCamera, LinearCamera>;

struct BackgroundChange {
  std::uint32_t frame = 0;
  BackgroundKind kind = BackgroundKind::kCheckerboard;
};

struct SceneConfig {
  std::uint64_t seed = 42;
  std::uint32_t width = 320;
  std::uint32_t height = 240;
  std::uint32_t frame_count = 30;
  double fps = 30.0;
  core::PinholeIntrinsics intrinsics{300.0f, 300.0f, 160.0f, 120.0f};
  BackgroundKind background_kind = BackgroundKind::kGradient;
  std::optional<BackgroundChange> background_change;
  // Uniform +-k intensity perturbation, 0 = noiseless.
  std::uint8_t noise_k = 0;
  BoxObject object;
  Trajectory trajectory = StaticTrajectory{};
  CameraMotion camera_motion = StaticCamera{};

  void validate() const;
};

// Object pose used by the default scenes: 2 m ahead, tilted so more than one
// face is visible.
core::Pose6D default_object_pose();
SceneConfig default_scene_config();

struct SceneMeta {
  std::uint64_t seed = 0;
  double fps = 30.0;
  BoxObject object;
};

struct SequenceBundle {
  std::vector<core::Frame> frames;
  std::vector<core::InstanceMask> gt_masks;
  std::vector<core::Frame> gt_backgrounds;
  std::vector<core::Pose6D> gt_poses;
  std::vector<core::Quatf> symmetry_group;
  SceneMeta meta;

  std::size_t size() const { return frames.size(); }
  friend bool operator==(const SequenceBundle& a, const SequenceBundle& b);
};

// u = fx*x/z + cx, v = fy*y/z + cy. Throws BehindCamera for z <= 0.
Eigen::Vector2d project_point(const core::PinholeIntrinsics& intr, const Eigen::Vector3d& p_cam);

SequenceBundle generate_sequence(const SceneConfig& cfg);

// Camera-frame object pose and world-frame camera pose at frame i.
core::Pose6D object_pose_at(const SceneConfig& cfg, std::uint32_t i);
core::Pose6D camera_pose_at(const SceneConfig& cfg, std::uint32_t i);

core::Rgb background_color(BackgroundKind kind, std::uint64_t seed, double x_m, double y_m,
                           const std::array<core::Rgb, 6>& protected_colors);

}  // namespace drpipe::scenegen
