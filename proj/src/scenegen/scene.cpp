#include "drpipe/scenegen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "drpipe/compose/asset.hpp"
#include "drpipe/compose/placement.hpp"
#include "drpipe/compose/raster.hpp"
#include "drpipe/core/error.hpp"
#include "drpipe/core/rng.hpp"
#include "drpipe/core/rotation.hpp"

namespace drpipe::scenegen {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kCheckerSize = 0.5;
constexpr double kNoiseCell = 0.25;
// Noise-texture colors stay this far (Chebyshev) from every protected color.
constexpr int kProtectedBand = 48;

std::uint8_t clamp_u8(double v) { return std::uint8_t(std::clamp(std::lround(v), 0L, 255L)); }

core::Pose6D lerp_pose(const core::Pose6D& a, const core::Pose6D& b, double alpha) {
  core::Pose6D out;
  const Eigen::Vector3d t = (1.0 - alpha) * core::to_eigen(a.t) + alpha * core::to_eigen(b.t);
  out.t = core::to_vec3f(t);
  out.q = core::to_quatf(core::to_eigen(a.q).normalized().slerp(alpha, core::to_eigen(b.q).normalized()));
  out.confidence = 1.0f;
  return out;
}

double alpha_at(const SceneConfig& cfg, std::uint32_t i) {
  return cfg.frame_count <= 1 ? 0.0 : double(i) / double(cfg.frame_count - 1);
}

int chebyshev(core::Rgb a, core::Rgb b) {
  return std::max({std::abs(int(a.r) - int(b.r)), std::abs(int(a.g) - int(b.g)), std::abs(int(a.b) - int(b.b))});
}

}  // namespace

void BoxObject::validate() const {
  if (!(extents.minCoeff() > 0.0) || !extents.allFinite()) {
    fail(ErrorCode::kInvalidConfig, "box extents must be positive");
  }
  for (std::size_t i = 0; i < face_colors.size(); ++i) {
    for (std::size_t j = i + 1; j < face_colors.size(); ++j) {
      if (face_colors[i] == face_colors[j]) fail(ErrorCode::kInvalidConfig, "box face colors must be distinct");
    }
  }
}

std::vector<core::Quatf> BoxObject::symmetry_group() {
  return {core::Quatf{1, 0, 0, 0}, core::Quatf{0, 1, 0, 0}, core::Quatf{0, 0, 1, 0}, core::Quatf{0, 0, 0, 1}};
}

void SceneConfig::validate() const {
  if (width == 0 || height == 0 || width > core::kMaxImageDim || height > core::kMaxImageDim) {
    fail(ErrorCode::kInvalidConfig, "image dimensions out of range");
  }
  if (frame_count < 1) fail(ErrorCode::kInvalidConfig, "frame_count must be >= 1");
  if (!(fps > 0.0)) fail(ErrorCode::kInvalidConfig, "fps must be positive");
  try {
    intrinsics.validate(width, height);
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidConfig, e.what());
  }
  object.validate();
  if (const auto* o = std::get_if<OrbitTrajectory>(&trajectory); o && !(o->radius_m >= 0.0)) {
    fail(ErrorCode::kInvalidConfig, "orbit radius must be non-negative");
  }
}

core::Pose6D default_object_pose() {
  core::Pose6D p;
  p.t = {0.0f, 0.0f, 2.0f};
  const Eigen::Quaterniond q = Eigen::AngleAxisd(20.0 * kDegToRad, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(15.0 * kDegToRad, Eigen::Vector3d::UnitY());
  p.q = core::to_quatf(q);
  return p;
}

SceneConfig default_scene_config() {
  SceneConfig cfg;
  cfg.trajectory = StaticTrajectory{default_object_pose()};
  return cfg;
}

bool operator==(const SequenceBundle& a, const SequenceBundle& b) {
  return a.frames == b.frames && a.gt_masks == b.gt_masks && a.gt_backgrounds == b.gt_backgrounds &&
         a.gt_poses == b.gt_poses && a.symmetry_group == b.symmetry_group && a.meta.seed == b.meta.seed &&
         a.meta.fps == b.meta.fps && a.meta.object.extents == b.meta.object.extents &&
         a.meta.object.face_colors == b.meta.object.face_colors;
}

Eigen::Vector2d project_point(const core::PinholeIntrinsics& intr, const Eigen::Vector3d& p) {
  if (!(p.z() > 0.0)) fail(ErrorCode::kBehindCamera, "z = " + std::to_string(p.z()));
  return {double(intr.fx) * p.x() / p.z() + double(intr.cx), double(intr.fy) * p.y() / p.z() + double(intr.cy)};
}

core::Pose6D camera_pose_at(const SceneConfig& cfg, std::uint32_t i) {
  if (const auto* s = std::get_if<StaticCamera>(&cfg.camera_motion)) return s->pose;
  const auto& lin = std::get<LinearCamera>(cfg.camera_motion);
  return lerp_pose(lin.start, lin.end, alpha_at(cfg, i));
}

core::Pose6D object_pose_at(const SceneConfig& cfg, std::uint32_t i) {
  core::Pose6D world;
  if (const auto* s = std::get_if<StaticTrajectory>(&cfg.trajectory)) {
    world = s->pose;
  } else if (const auto* l = std::get_if<LinearTrajectory>(&cfg.trajectory)) {
    world = lerp_pose(l->start, l->end, alpha_at(cfg, i));
  } else {
    const auto& o = std::get<OrbitTrajectory>(cfg.trajectory);
    const double theta = double(i) * o.angular_speed_deg_per_frame * kDegToRad;
    const Eigen::Vector3d t =
        core::to_eigen(o.center) + o.radius_m * Eigen::Vector3d(std::cos(theta), 0.0, std::sin(theta));
    world.t = core::to_vec3f(t);
    world.q = o.rotation;
  }
  world.confidence = 1.0f;
  if (std::holds_alternative<StaticCamera>(cfg.camera_motion) &&
      std::get<StaticCamera>(cfg.camera_motion).pose == core::identity_pose()) {
    return world;
  }
  core::Pose6D cam = core::compose_poses(core::invert_pose(camera_pose_at(cfg, i)), world);
  cam.confidence = 1.0f;
  return cam;
}

core::Rgb background_color(BackgroundKind kind, std::uint64_t seed, double x, double y,
                           const std::array<core::Rgb, 6>& protected_colors) {
  switch (kind) {
    case BackgroundKind::kCheckerboard: {
      const auto cx = std::int64_t(std::floor(x / kCheckerSize));
      const auto cy = std::int64_t(std::floor(y / kCheckerSize));
      return ((cx + cy) & 1) ? core::Rgb{200, 200, 195} : core::Rgb{70, 72, 78};
    }
    case BackgroundKind::kGradient: {
      const double base = 110.0 + 8.0 * x + 5.0 * y;
      return {clamp_u8(base), clamp_u8(base + 6.0), clamp_u8(base + 14.0)};
    }
    case BackgroundKind::kNoiseTexture: {
      const auto cx = std::int64_t(std::floor(x / kNoiseCell));
      const auto cy = std::int64_t(std::floor(y / kNoiseCell));
      core::Rng rng(core::mix_seed(seed, core::mix_seed(std::uint64_t(cx), std::uint64_t(cy))));
      core::Rgb c{};
      for (int attempt = 0; attempt < 64; ++attempt) {
        c = {std::uint8_t(rng() & 0xff), std::uint8_t(rng() & 0xff), std::uint8_t(rng() & 0xff)};
        bool ok = true;
        for (const auto& p : protected_colors) ok = ok && chebyshev(c, p) > kProtectedBand;
        if (ok) return c;
      }
      // Mid gray is outside the band of any saturated key color.
      return {128, 128, 128};
    }
  }
  return {};
}

SequenceBundle generate_sequence(const SceneConfig& cfg) {
  cfg.validate();
  const std::uint32_t w = cfg.width;
  const std::uint32_t h = cfg.height;
  const std::size_t n = std::size_t(w) * h;
  const auto& intr = cfg.intrinsics;
  const compose::Mesh box = compose::make_box_mesh(cfg.object.extents, cfg.object.face_colors);

  SequenceBundle out;
  out.symmetry_group = BoxObject::symmetry_group();
  out.meta = {cfg.seed, cfg.fps, cfg.object};

  for (std::uint32_t i = 0; i < cfg.frame_count; ++i) {
    const core::Pose6D cam_pose = camera_pose_at(cfg, i);
    const core::Pose6D obj_pose = object_pose_at(cfg, i);
    const BackgroundKind kind =
        (cfg.background_change && i >= cfg.background_change->frame) ? cfg.background_change->kind
                                                                      : cfg.background_kind;

    std::vector<int> noise;
    if (cfg.noise_k > 0) {
      core::Rng rng(core::mix_seed(cfg.seed, 0x6e6f697365ull + i));
      noise.resize(n * 3);
      for (auto& v : noise) v = int(core::uniform_int(rng, -cfg.noise_k, cfg.noise_k));
    }
    auto perturb = [&](std::size_t idx, std::uint8_t v) -> std::uint8_t {
      if (noise.empty()) return v;
      return std::uint8_t(std::clamp(int(v) + noise[idx], 0, 255));
    };

    // The background is a camera-facing plane; camera translation slides the
    // texture so a moving camera sees a moving background.
    std::vector<std::uint8_t> bg(n * 3);
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        const double wx = (double(x) - intr.cx) / intr.fx * kBackgroundDepth + cam_pose.t.x;
        const double wy = (double(y) - intr.cy) / intr.fy * kBackgroundDepth + cam_pose.t.y;
        const core::Rgb c = background_color(kind, cfg.seed, wx, wy, cfg.object.face_colors);
        const std::size_t p = (std::size_t(y) * w + x) * 3;
        bg[p] = perturb(p, c.r);
        bg[p + 1] = perturb(p + 1, c.g);
        bg[p + 2] = perturb(p + 2, c.b);
      }
    }

    // Initial depth just in front of the plane, so anything at or behind it
    // stays hidden and every covered pixel reads strictly nearer than 10 m.
    compose::RasterBuffer raster(w, h, double(kBackgroundDepth) - 1e-5);
    raster.draw(compose::place_triangles(box, obj_pose, 1.0), intr);

    std::vector<std::uint8_t> rgb = bg;
    std::vector<float> depth(n, kBackgroundDepth);
    std::vector<std::uint16_t> labels(n, 0);
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        if (!raster.covered(x, y)) continue;
        const std::size_t idx = std::size_t(y) * w + x;
        const core::Rgb c = raster.color(x, y);
        rgb[3 * idx] = perturb(3 * idx, c.r);
        rgb[3 * idx + 1] = perturb(3 * idx + 1, c.g);
        rgb[3 * idx + 2] = perturb(3 * idx + 2, c.b);
        depth[idx] = float(raster.depth(x, y));
        labels[idx] = 1;
      }
    }

    core::FrameHeader header;
    header.frame_id = i;
    header.capture_ts_us = std::uint64_t(std::llround(double(i) * 1e6 / cfg.fps));
    header.width = w;
    header.height = h;
    header.intrinsics = intr;
    header.camera_pose = cam_pose;
    out.frames.emplace_back(header, std::move(rgb), std::move(depth));
    out.gt_backgrounds.emplace_back(header, std::move(bg));
    out.gt_masks.emplace_back(w, h, std::move(labels));
    out.gt_poses.push_back(obj_pose);
  }
  return out;
}

}  // namespace drpipe::scenegen
