#include "drpipe/gating/gating.hpp"

#include <algorithm>
#include <cmath>

#include "drpipe/core/error.hpp"
#include "drpipe/core/rotation.hpp"

namespace drpipe::gating {

void GatingConfig::validate() const {
  if (tile_px < 1) fail(ErrorCode::kInvalidConfig, "tile_px must be >= 1");
  if (!(tau_cover > 0.0 && tau_cover <= 1.0)) fail(ErrorCode::kInvalidConfig, "tau_cover must be in (0, 1]");
  if (keyframe_interval < 1) fail(ErrorCode::kInvalidConfig, "keyframe_interval must be >= 1");
  if (!(pose_eps_t > 0.0 && pose_eps_r > 0.0 && es_sigma_t > 0.0 && es_sigma_e > 0.0 && es_threshold > 0.0)) {
    fail(ErrorCode::kInvalidConfig, "gating tolerances and scales must be positive");
  }
}

BackgroundCache::BackgroundCache(std::uint32_t width, std::uint32_t height, std::uint32_t tile_px)
    : width_(width),
      height_(height),
      tile_px_(tile_px),
      tiles_x_((width + tile_px - 1) / tile_px),
      tiles_y_((height + tile_px - 1) / tile_px),
      tiles_(std::size_t(tiles_x_) * tiles_y_),
      fill_rgb_(std::size_t(width) * height * 3, 0),
      fill_hole_(std::size_t(width) * height, 0) {
  if (tile_px == 0) fail(ErrorCode::kInvalidConfig, "tile_px must be >= 1");
}

std::size_t BackgroundCache::cached_tile_count() const {
  return std::size_t(std::count_if(tiles_.begin(), tiles_.end(), [](const auto& t) { return t.has_value(); }));
}

void BackgroundCache::clear_observations() {
  for (auto& t : tiles_) t.reset();
  fill_region_.reset();
}

bool BackgroundCache::lookup(std::uint32_t x, std::uint32_t y, core::Rgb& out, bool& observed) const {
  const std::uint32_t tx = x / tile_px_;
  const std::uint32_t ty = y / tile_px_;
  if (const auto& t = tiles_[std::size_t(ty) * tiles_x_ + tx]) {
    const std::uint32_t tw = std::min(tile_px_, width_ - tx * tile_px_);
    const std::size_t i = (std::size_t(y - ty * tile_px_) * tw + (x - tx * tile_px_)) * 3;
    out = {t->rgb[i], t->rgb[i + 1], t->rgb[i + 2]};
    observed = true;
    return true;
  }
  if (fill_region_ && fill_region_->contains(int(x), int(y))) {
    const std::size_t p = std::size_t(y) * width_ + x;
    out = {fill_rgb_[3 * p], fill_rgb_[3 * p + 1], fill_rgb_[3 * p + 2]};
    observed = fill_hole_[p] == 0;
    return true;
  }
  return false;
}

void BypassPatch::paste_into(std::vector<std::uint8_t>& frame_rgb, std::uint32_t frame_width) const {
  const std::size_t rw = std::size_t(region.width());
  for (int y = region.y0; y <= region.y1; ++y) {
    const std::size_t src = std::size_t(y - region.y0) * rw * 3;
    const std::size_t dst = (std::size_t(y) * frame_width + std::size_t(region.x0)) * 3;
    std::copy_n(rgb.begin() + std::ptrdiff_t(src), rw * 3, frame_rgb.begin() + std::ptrdiff_t(dst));
  }
}

core::PixelRect predict_region(const core::InstanceMask& prev_mask, std::uint16_t instance,
                               std::uint32_t dilation_px) {
  const auto box = prev_mask.bounding_box(instance);
  if (!box) fail(ErrorCode::kEmptyInstance, "instance " + std::to_string(instance) + " absent from mask");
  const int d = int(dilation_px);
  return {std::max(0, box->x0 - d), std::max(0, box->y0 - d), std::min(int(prev_mask.width()) - 1, box->x1 + d),
          std::min(int(prev_mask.height()) - 1, box->y1 + d)};
}

bool camera_within(const core::Pose6D& reference, const core::Pose6D& camera_pose, const GatingConfig& cfg) {
  const double dt = (core::to_eigen(camera_pose.t) - core::to_eigen(reference.t)).norm();
  if (dt > cfg.pose_eps_t) return false;
  return core::quat_geodesic_deg(reference.q, camera_pose.q) <= cfg.pose_eps_r;
}

GateDecision2D frame_passer_decide(const BackgroundCache& cache, const GatingConfig& cfg,
                                   const core::Pose6D& camera_pose,
                                   const std::optional<core::PixelRect>& predicted_region) {
  GateDecision2D d;
  if (!cfg.frame_passer_enabled) {
    d.reason = ForwardReason::kDisabled;
    return d;
  }
  if (!predicted_region || predicted_region->empty()) {
    d.reason = ForwardReason::kNoRegion;
    return d;
  }
  if (!cache.initialized() || !cache.reference_camera_pose()) {
    d.reason = ForwardReason::kColdCache;
    return d;
  }
  // Counting this frame, the bypass run must stay shorter than the interval
  // so every window of keyframe_interval frames holds a full-path frame.
  if (std::uint64_t(cache.frames_since_keyframe()) + 1 >= cfg.keyframe_interval) {
    d.reason = ForwardReason::kKeyframeDue;
    return d;
  }
  if (!camera_within(*cache.reference_camera_pose(), camera_pose, cfg)) {
    d.reason = ForwardReason::kCameraMoved;
    return d;
  }

  const auto& r = *predicted_region;
  BypassPatch patch;
  patch.region = r;
  patch.rgb.resize(r.area() * 3);
  patch.observed.resize(r.area());
  std::size_t covered = 0;
  std::size_t i = 0;
  for (int y = r.y0; y <= r.y1; ++y) {
    for (int x = r.x0; x <= r.x1; ++x, ++i) {
      core::Rgb c{};
      bool observed = false;
      if (!cache.lookup(std::uint32_t(x), std::uint32_t(y), c, observed)) continue;
      ++covered;
      patch.rgb[3 * i] = c.r;
      patch.rgb[3 * i + 1] = c.g;
      patch.rgb[3 * i + 2] = c.b;
      patch.observed[i] = observed;
    }
  }
  d.coverage = double(covered) / double(r.area());
  if (d.coverage < cfg.tau_cover) {
    d.reason = ForwardReason::kUncovered;
    return d;
  }
  d.bypass = true;
  d.patch = std::move(patch);
  return d;
}

void cache_update(BackgroundCache& cache, const GatingConfig& cfg, const core::Frame& frame,
                  const core::InstanceMask& mask, const core::Pose6D& camera_pose, GatePath path) {
  if (mask.width() != frame.width() || mask.height() != frame.height()) {
    fail(ErrorCode::kDimMismatch, "mask and frame dimensions differ");
  }
  if (!cache.initialized() || cache.width() != frame.width() || cache.height() != frame.height() ||
      cache.tile_px() != cfg.tile_px) {
    cache = BackgroundCache(frame.width(), frame.height(), cfg.tile_px);
  }
  if (!cache.reference_ || !camera_within(*cache.reference_, camera_pose, cfg)) {
    cache.clear_observations();
    cache.reference_ = camera_pose;
  }
  if (path == GatePath::kBypass) {
    ++cache.frames_since_keyframe_;
    return;
  }
  cache.frames_since_keyframe_ = 0;

  const std::uint32_t w = frame.width();
  const std::uint32_t h = frame.height();
  const std::uint32_t tp = cache.tile_px_;
  const auto labels = mask.labels();
  const auto rgb = frame.rgb();
  for (std::uint32_t ty = 0; ty < cache.tiles_y_; ++ty) {
    for (std::uint32_t tx = 0; tx < cache.tiles_x_; ++tx) {
      const std::uint32_t x0 = tx * tp, y0 = ty * tp;
      const std::uint32_t x1 = std::min(x0 + tp, w), y1 = std::min(y0 + tp, h);
      bool background = true;
      for (std::uint32_t y = y0; y < y1 && background; ++y) {
        for (std::uint32_t x = x0; x < x1; ++x) {
          if (labels[std::size_t(y) * w + x] != 0) {
            background = false;
            break;
          }
        }
      }
      if (!background) continue;
      CacheTile tile;
      tile.last_update_frame_id = frame.frame_id();
      tile.rgb.reserve(std::size_t(x1 - x0) * (y1 - y0) * 3);
      for (std::uint32_t y = y0; y < y1; ++y) {
        const auto row = rgb.subspan((std::size_t(y) * w + x0) * 3, std::size_t(x1 - x0) * 3);
        tile.rgb.insert(tile.rgb.end(), row.begin(), row.end());
      }
      cache.tiles_[std::size_t(ty) * cache.tiles_x_ + tx] = std::move(tile);
    }
  }
}

void cache_store_fill(BackgroundCache& cache, const core::Frame& inpainted, const core::InstanceMask& hole,
                      const core::PixelRect& region) {
  if (!cache.initialized() || cache.width() != inpainted.width() || cache.height() != inpainted.height() ||
      hole.width() != inpainted.width() || hole.height() != inpainted.height()) {
    fail(ErrorCode::kDimMismatch, "fill layer dimensions differ from the cache");
  }
  const std::uint32_t w = inpainted.width();
  const auto rgb = inpainted.rgb();
  const auto labels = hole.labels();
  for (int y = region.y0; y <= region.y1; ++y) {
    for (int x = region.x0; x <= region.x1; ++x) {
      const std::size_t p = std::size_t(y) * w + std::size_t(x);
      std::copy_n(rgb.begin() + std::ptrdiff_t(3 * p), 3, cache.fill_rgb_.begin() + std::ptrdiff_t(3 * p));
      cache.fill_hole_[p] = labels[p] != 0;
    }
  }
  cache.fill_region_ = region;
}

double feature_distance(const perception::PoseFeatures& prev, const perception::PoseFeatures& curr,
                        const GatingConfig& cfg) {
  const double dc = (core::to_eigen(curr.centroid_cam) - core::to_eigen(prev.centroid_cam)).norm();
  const double de = (core::to_eigen(curr.extent_cam) - core::to_eigen(prev.extent_cam)).norm();
  return std::max(dc / cfg.es_sigma_t, de / cfg.es_sigma_e);
}

GateDecision3D early_stop_decide(const std::optional<perception::PoseFeatures>& prev,
                                 const perception::PoseFeatures& curr,
                                 const std::optional<core::Pose6D>& prev_pose, const GatingConfig& cfg) {
  GateDecision3D d;
  if (!prev) return d;
  d.distance = feature_distance(*prev, curr, cfg);
  if (!cfg.early_stop_enabled) return d;
  if (!prev_pose) fail(ErrorCode::kMissingPrevPose, "previous features recorded without a pose");
  if (*d.distance <= cfg.es_threshold) {
    d.reuse = true;
    d.pose = prev_pose;
  }
  return d;
}

}  // namespace drpipe::gating
