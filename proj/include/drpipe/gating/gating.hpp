#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "drpipe/core/types.hpp"
#include "drpipe/perception/pose.hpp"

namespace drpipe::gating {

struct GatingConfig {
  bool frame_passer_enabled = true;
  bool early_stop_enabled = true;
  std::uint32_t tile_px = 16;
  double tau_cover = 1.0;
  double pose_eps_t = 1e-3;
  double pose_eps_r = 0.1;
  std::uint32_t keyframe_interval = 30;
  double es_sigma_t = 0.02;
  double es_sigma_e = 0.02;
  double es_threshold = 1.0;
  std::uint32_t region_dilation_px = 8;

  friend bool operator==(const GatingConfig&, const GatingConfig&) = default;

  void validate() const;
};

enum class GatePath { kForward, kBypass };

struct CacheTile {
  std::vector<std::uint8_t> rgb;  // tile-local rows, clipped at the frame edge
  std::uint64_t last_update_frame_id = 0;
};

// Background observations keyed to one camera pose. Besides whole background
// tiles, the cache keeps the last full-path output over the region around
// the target (the "fill" layer): its non-hole pixels are real observations
// and its hole pixels are the inpainted estimate from that keyframe.
class BackgroundCache {
 public:
  BackgroundCache() = default;
  BackgroundCache(std::uint32_t width, std::uint32_t height, std::uint32_t tile_px);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t tile_px() const { return tile_px_; }
  std::uint32_t tiles_x() const { return tiles_x_; }
  std::uint32_t tiles_y() const { return tiles_y_; }
  bool initialized() const { return tile_px_ != 0; }

  const std::optional<core::Pose6D>& reference_camera_pose() const { return reference_; }
  std::uint32_t frames_since_keyframe() const { return frames_since_keyframe_; }
  const std::optional<CacheTile>& tile(std::uint32_t tx, std::uint32_t ty) const {
    return tiles_[std::size_t(ty) * tiles_x_ + tx];
  }
  std::size_t cached_tile_count() const;
  const std::optional<core::PixelRect>& fill_region() const { return fill_region_; }

  // Cached value of pixel (x, y) if any; `observed` tells whether it is a
  // real background observation rather than an inpainted estimate.
  bool lookup(std::uint32_t x, std::uint32_t y, core::Rgb& out, bool& observed) const;

 private:
  friend void cache_update(BackgroundCache&, const GatingConfig&, const core::Frame&,
                           const core::InstanceMask&, const core::Pose6D&, GatePath);
  friend void cache_store_fill(BackgroundCache&, const core::Frame&, const core::InstanceMask&,
                               const core::PixelRect&);
  void clear_observations();

  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::uint32_t tile_px_ = 0;
  std::uint32_t tiles_x_ = 0;
  std::uint32_t tiles_y_ = 0;
  std::optional<core::Pose6D> reference_;
  std::vector<std::optional<CacheTile>> tiles_;
  std::optional<core::PixelRect> fill_region_;
  std::vector<std::uint8_t> fill_rgb_;   // full frame, valid inside fill_region_
  std::vector<std::uint8_t> fill_hole_;  // 1 where the fill value was inpainted
  std::uint32_t frames_since_keyframe_ = 0;
};

struct BypassPatch {
  core::PixelRect region;
  std::vector<std::uint8_t> rgb;       // region rows, 3 bytes per pixel
  std::vector<std::uint8_t> observed;  // 1 per pixel

  void paste_into(std::vector<std::uint8_t>& frame_rgb, std::uint32_t frame_width) const;
};

enum class ForwardReason { kDisabled, kNoRegion, kColdCache, kKeyframeDue, kCameraMoved, kUncovered };

struct GateDecision2D {
  bool bypass = false;
  ForwardReason reason = ForwardReason::kDisabled;  // meaningful when !bypass
  double coverage = 0.0;
  std::optional<BypassPatch> patch;
};

// Bounding box of `instance`, grown by dilation_px and clipped to the frame.
core::PixelRect predict_region(const core::InstanceMask& prev_mask, std::uint16_t instance,
                               std::uint32_t dilation_px);

// True when `camera_pose` is within (pose_eps_t, pose_eps_r) of `reference`.
bool camera_within(const core::Pose6D& reference, const core::Pose6D& camera_pose, const GatingConfig& cfg);

GateDecision2D frame_passer_decide(const BackgroundCache& cache, const GatingConfig& cfg,
                                   const core::Pose6D& camera_pose,
                                   const std::optional<core::PixelRect>& predicted_region);

// Records the outcome of one frame. On the full path every all-background
// tile of `frame` is stored and the keyframe counter resets; on a bypass the
// counter advances. A camera pose outside tolerance clears the cache first.
void cache_update(BackgroundCache& cache, const GatingConfig& cfg, const core::Frame& frame,
                  const core::InstanceMask& mask, const core::Pose6D& camera_pose, GatePath path);

// Stores the full-path output over `region`; `hole` marks the pixels whose
// value was synthesized rather than observed.
void cache_store_fill(BackgroundCache& cache, const core::Frame& inpainted, const core::InstanceMask& hole,
                      const core::PixelRect& region);

struct GateDecision3D {
  bool reuse = false;
  std::optional<core::Pose6D> pose;  // set on reuse, bit-identical to prev_pose
  std::optional<double> distance;
};

double feature_distance(const perception::PoseFeatures& prev, const perception::PoseFeatures& curr,
                        const GatingConfig& cfg);

GateDecision3D early_stop_decide(const std::optional<perception::PoseFeatures>& prev,
                                 const perception::PoseFeatures& curr,
                                 const std::optional<core::Pose6D>& prev_pose, const GatingConfig& cfg);

}  // namespace drpipe::gating
