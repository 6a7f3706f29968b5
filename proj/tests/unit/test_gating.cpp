#include <doctest.h>

#include "drpipe/core/rng.hpp"
#include "drpipe/core/rotation.hpp"
#include "drpipe/gating/gating.hpp"
#include "drpipe/perception/inpaint.hpp"
#include "drpipe/scenegen/scene.hpp"
#include "support/test_util.hpp"

using namespace drpipe;
using namespace drpipe::gating;
using perception::PoseFeatures;

namespace {

core::InstanceMask block_mask(std::uint32_t w, std::uint32_t h, int x0, int y0, int x1, int y1) {
  std::vector<std::uint16_t> lab(std::size_t(w) * h, 0);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) lab[std::size_t(y) * w + std::size_t(x)] = 1;
  }
  return core::InstanceMask(w, h, std::move(lab));
}

core::Frame noise_frame(core::Rng& rng, std::uint32_t w, std::uint32_t h) {
  std::vector<std::uint8_t> rgb(std::size_t(w) * h * 3);
  for (auto& b : rgb) b = std::uint8_t(rng());
  return core::Frame(testing::header(w, h), std::move(rgb));
}

}  // namespace

TEST_CASE("gating config validation") {
  GatingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.tile_px = 0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = {};
  cfg.tau_cover = 0.0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = {};
  cfg.keyframe_interval = 0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = {};
  cfg.es_sigma_e = 0.0;
  CHECK_ERROR_CODE(cfg.validate(), ErrorCode::kInvalidConfig);
}

TEST_CASE("predict_region") {
  const auto m = block_mask(100, 80, 30, 10, 40, 20);
  CHECK(predict_region(m, 1, 8) == core::PixelRect{22, 2, 48, 28});
  const auto edge = block_mask(100, 80, 0, 75, 5, 79);
  CHECK(predict_region(edge, 1, 8) == core::PixelRect{0, 67, 13, 79});
  CHECK_ERROR_CODE(predict_region(m, 2, 8), ErrorCode::kEmptyInstance);
}

TEST_CASE("frame passer decisions") {
  core::Rng rng(3);
  GatingConfig cfg;
  const auto frame = noise_frame(rng, 64, 48);
  const auto mask = block_mask(64, 48, 20, 16, 27, 23);
  const core::PixelRect region = predict_region(mask, 1, cfg.region_dilation_px);
  const auto cam = core::identity_pose();

  BackgroundCache cache;
  auto d = frame_passer_decide(cache, cfg, cam, region);
  CHECK_FALSE(d.bypass);
  CHECK(d.reason == ForwardReason::kColdCache);

  cache_update(cache, cfg, frame, mask, cam, GatePath::kForward);
  // Tiles alone never cover a region that contains the object.
  d = frame_passer_decide(cache, cfg, cam, region);
  CHECK_FALSE(d.bypass);
  CHECK(d.reason == ForwardReason::kUncovered);
  CHECK(d.coverage < 1.0);

  const auto filled = perception::inpaint(frame, mask, perception::InpaintQuality::fast());
  cache_store_fill(cache, filled, mask, region);
  d = frame_passer_decide(cache, cfg, cam, region);
  REQUIRE(d.bypass);
  CHECK(d.coverage == 1.0);
  const auto& patch = *d.patch;
  CHECK(patch.region == region);
  std::size_t i = 0;
  for (int y = region.y0; y <= region.y1; ++y) {
    for (int x = region.x0; x <= region.x1; ++x, ++i) {
      const bool in_hole = mask.at(std::uint32_t(x), std::uint32_t(y)) != 0;
      const core::Rgb expect = filled.pixel(std::uint32_t(x), std::uint32_t(y));
      CHECK(core::Rgb{patch.rgb[3 * i], patch.rgb[3 * i + 1], patch.rgb[3 * i + 2]} == expect);
      CHECK(patch.observed[i] == !in_hole);
      if (!in_hole) CHECK(expect == frame.pixel(std::uint32_t(x), std::uint32_t(y)));
    }
  }

  std::vector<std::uint8_t> out(frame.rgb().begin(), frame.rgb().end());
  patch.paste_into(out, frame.width());
  CHECK(out == std::vector<std::uint8_t>(filled.rgb().begin(), filled.rgb().end()));

  CHECK(frame_passer_decide(cache, cfg, cam, std::nullopt).reason == ForwardReason::kNoRegion);
  GatingConfig off = cfg;
  off.frame_passer_enabled = false;
  CHECK(frame_passer_decide(cache, off, cam, region).reason == ForwardReason::kDisabled);
  core::Pose6D moved = cam;
  moved.t.x = 0.01f;
  CHECK(frame_passer_decide(cache, cfg, moved, region).reason == ForwardReason::kCameraMoved);
  core::Pose6D turned = cam;
  turned.q = core::quat_from_axis_angle({0, 1, 0}, 0.01);
  CHECK(frame_passer_decide(cache, cfg, turned, region).reason == ForwardReason::kCameraMoved);
}

TEST_CASE("coverage threshold") {
  // 1-pixel tiles: a 10-pixel region with one object pixel has coverage 0.9.
  GatingConfig cfg;
  cfg.tile_px = 1;
  const auto frame = testing::solid_frame(10, 10, {5, 6, 7});
  const auto mask = block_mask(10, 10, 4, 0, 4, 0);
  BackgroundCache cache;
  cache_update(cache, cfg, frame, mask, core::identity_pose(), GatePath::kForward);
  CHECK(cache.cached_tile_count() == 99);
  const core::PixelRect row{0, 0, 9, 0};
  auto d = frame_passer_decide(cache, cfg, core::identity_pose(), row);
  CHECK_FALSE(d.bypass);
  CHECK(d.coverage == doctest::Approx(0.9));
  cfg.tau_cover = 0.9;
  CHECK(frame_passer_decide(cache, cfg, core::identity_pose(), row).bypass);
}

TEST_CASE("cache_update") {
  GatingConfig cfg;
  const auto seq = scenegen::generate_sequence(scenegen::default_scene_config());
  const auto& mask = seq.gt_masks[0];
  BackgroundCache cache;
  cache_update(cache, cfg, seq.frames[0], mask, core::identity_pose(), GatePath::kForward);
  CHECK(cache.tiles_x() == 20);
  CHECK(cache.tiles_y() == 15);
  std::size_t half_covered = 0;
  for (std::uint32_t ty = 0; ty < cache.tiles_y(); ++ty) {
    for (std::uint32_t tx = 0; tx < cache.tiles_x(); ++tx) {
      std::size_t object_px = 0;
      for (std::uint32_t y = ty * 16; y < ty * 16 + 16; ++y) {
        for (std::uint32_t x = tx * 16; x < tx * 16 + 16; ++x) object_px += mask.at(x, y) != 0;
      }
      CHECK(cache.tile(tx, ty).has_value() == (object_px == 0));
      half_covered += object_px > 0 && object_px < 256;
      if (const auto& t = cache.tile(tx, ty)) {
        // Cached tiles hold exactly the background the scene was drawn on.
        for (std::uint32_t y = 0; y < 16; ++y) {
          for (std::uint32_t x = 0; x < 16; ++x) {
            const std::size_t i = (y * 16 + x) * 3;
            CHECK(core::Rgb{t->rgb[i], t->rgb[i + 1], t->rgb[i + 2]} ==
                  seq.gt_backgrounds[0].pixel(tx * 16 + x, ty * 16 + y));
          }
        }
      }
    }
  }
  CHECK(half_covered > 0);
  CHECK(cache.frames_since_keyframe() == 0);

  cache_update(cache, cfg, seq.frames[1], mask, core::identity_pose(), GatePath::kBypass);
  cache_update(cache, cfg, seq.frames[2], mask, core::identity_pose(), GatePath::kBypass);
  CHECK(cache.frames_since_keyframe() == 2);
  const std::size_t tiles_before = cache.cached_tile_count();

  core::Pose6D moved = core::identity_pose();
  moved.t.x = 0.5f;
  cache_update(cache, cfg, seq.frames[3], mask, moved, GatePath::kBypass);
  CHECK(cache.cached_tile_count() == 0);
  CHECK(cache.reference_camera_pose()->t == moved.t);
  CHECK(cache.frames_since_keyframe() == 3);
  cache_update(cache, cfg, seq.frames[3], mask, moved, GatePath::kForward);
  CHECK(cache.cached_tile_count() == tiles_before);
  CHECK(cache.frames_since_keyframe() == 0);

  CHECK_ERROR_CODE(cache_update(cache, cfg, seq.frames[0], core::InstanceMask::empty(3, 3), moved, GatePath::kForward),
                   ErrorCode::kDimMismatch);
}

TEST_CASE("keyframe liveness under random schedules") {
  core::Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    GatingConfig cfg;
    cfg.keyframe_interval = std::uint32_t(core::uniform_int(rng, 1, 12));
    cfg.tile_px = 4;
    const auto frame = testing::solid_frame(16, 16, {1, 1, 1});
    const auto mask = block_mask(16, 16, 6, 6, 9, 9);
    const core::PixelRect region = predict_region(mask, 1, 2);
    BackgroundCache cache;
    std::vector<bool> forward;
    for (int i = 0; i < 60; ++i) {
      // Randomly perturb the camera so some frames forward for other reasons.
      core::Pose6D cam = core::identity_pose();
      if (core::uniform_int(rng, 0, 9) == 0) cam.t.x = 1.0f;
      const auto d = frame_passer_decide(cache, cfg, cam, region);
      forward.push_back(!d.bypass);
      cache_update(cache, cfg, frame, mask, cam, d.bypass ? GatePath::kBypass : GatePath::kForward);
      if (!d.bypass) {
        cache_store_fill(cache, perception::inpaint(frame, mask, perception::InpaintQuality::fast(4)), mask, region);
      }
    }
    for (std::size_t s = 0; s + cfg.keyframe_interval <= forward.size(); ++s) {
      bool any = false;
      for (std::size_t k = s; k < s + cfg.keyframe_interval; ++k) any = any || forward[k];
      CHECK(any);
    }
    if (cfg.keyframe_interval > 1) {
      CHECK(std::count(forward.begin(), forward.end(), false) > 0);
    }
  }
}

TEST_CASE("bypass patches on a static scene are true background where observed") {
  GatingConfig cfg;
  const auto seq = scenegen::generate_sequence(scenegen::default_scene_config());
  const auto& mask = seq.gt_masks[0];
  const auto region = predict_region(mask, 1, cfg.region_dilation_px);
  BackgroundCache cache;
  cache_update(cache, cfg, seq.frames[0], mask, core::identity_pose(), GatePath::kForward);
  cache_store_fill(cache, perception::inpaint(seq.frames[0], mask, perception::InpaintQuality::fast()), mask,
                   region);
  std::size_t bypasses = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const auto d = frame_passer_decide(cache, cfg, seq.frames[i].camera_pose(), region);
    cache_update(cache, cfg, seq.frames[i], mask, seq.frames[i].camera_pose(),
                 d.bypass ? GatePath::kBypass : GatePath::kForward);
    if (!d.bypass) continue;
    ++bypasses;
    const auto& p = *d.patch;
    std::size_t k = 0;
    for (int y = region.y0; y <= region.y1; ++y) {
      for (int x = region.x0; x <= region.x1; ++x, ++k) {
        CHECK(p.observed[k] == (mask.at(std::uint32_t(x), std::uint32_t(y)) == 0));
        if (!p.observed[k]) continue;
        CHECK(core::Rgb{p.rgb[3 * k], p.rgb[3 * k + 1], p.rgb[3 * k + 2]} ==
              seq.gt_backgrounds[i].pixel(std::uint32_t(x), std::uint32_t(y)));
      }
    }
  }
  CHECK(bypasses == seq.size() - 1);
}

TEST_CASE("early stop examples") {
  GatingConfig cfg;
  const PoseFeatures base{{0.1f, 0.0f, 2.0f}, {0.3f, 0.2f, 0.1f}, 500};
  core::Pose6D prev_pose;
  prev_pose.t = {0.1f, 0.0f, 2.0f};
  prev_pose.q = core::quat_from_axis_angle({0, 0, 1}, 0.4);
  prev_pose.confidence = 0.9f;

  auto d = early_stop_decide(base, base, prev_pose, cfg);
  CHECK(d.reuse);
  CHECK(*d.distance == 0.0);
  CHECK(core::bit_equal(*d.pose, prev_pose));

  const PoseFeatures start{{0.0f, 0.0f, 2.0f}, base.extent_cam, 500};
  PoseFeatures shifted = start;
  shifted.centroid_cam.x = 0.01f;
  d = early_stop_decide(start, shifted, prev_pose, cfg);
  CHECK(d.reuse);
  CHECK(*d.distance == doctest::Approx(0.5));

  shifted.centroid_cam.x = 0.05f;
  d = early_stop_decide(start, shifted, prev_pose, cfg);
  CHECK_FALSE(d.reuse);
  CHECK(*d.distance == doctest::Approx(2.5));
  CHECK_FALSE(d.pose.has_value());

  d = early_stop_decide(std::nullopt, base, prev_pose, cfg);
  CHECK_FALSE(d.reuse);
  CHECK_FALSE(d.distance.has_value());

  GatingConfig off = cfg;
  off.early_stop_enabled = false;
  CHECK_FALSE(early_stop_decide(base, base, prev_pose, off).reuse);

  CHECK_ERROR_CODE(early_stop_decide(base, base, std::nullopt, cfg), ErrorCode::kMissingPrevPose);
}

TEST_CASE("early stop is monotone in the feature deltas") {
  core::Rng rng(5);
  GatingConfig cfg;
  for (int trial = 0; trial < 2000; ++trial) {
    const PoseFeatures prev{{0.0f, 0.0f, 2.0f}, {0.3f, 0.2f, 0.1f}, 100};
    const Eigen::Vector3d dc(core::uniform_real(rng, -0.03, 0.03), core::uniform_real(rng, -0.03, 0.03),
                             core::uniform_real(rng, -0.03, 0.03));
    const Eigen::Vector3d de(core::uniform_real(rng, -0.03, 0.03), core::uniform_real(rng, -0.03, 0.03),
                             core::uniform_real(rng, -0.03, 0.03));
    auto with = [&](double s_c, double s_e) {
      PoseFeatures f = prev;
      f.centroid_cam = core::to_vec3f(core::to_eigen(prev.centroid_cam) + s_c * dc);
      f.extent_cam = core::to_vec3f(core::to_eigen(prev.extent_cam) + s_e * de);
      return f;
    };
    if (!early_stop_decide(prev, with(1, 1), core::identity_pose(), cfg).reuse) continue;
    const double a = core::uniform_unit(rng), b = core::uniform_unit(rng);
    CHECK(early_stop_decide(prev, with(a, b), core::identity_pose(), cfg).reuse);
  }
}
