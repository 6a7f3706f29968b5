#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include <Eigen/Core>
#include <json.hpp>

#include "drpipe/compose/asset.hpp"
#include "drpipe/compose/placement.hpp"
#include "drpipe/core/timing.hpp"
#include "drpipe/core/types.hpp"
#include "drpipe/gating/gating.hpp"
#include "drpipe/perception/backends.hpp"
#include "drpipe/pipeline/session_config.hpp"

namespace drpipe::pipeline {

struct ResultFlags {
  bool frame_passer_bypass = false;
  bool early_stop_reuse = false;
  bool keyframe = false;
  bool no_target = false;

  friend bool operator==(const ResultFlags&, const ResultFlags&) = default;

  std::uint8_t bits() const;
  static ResultFlags from_bits(std::uint8_t bits);
};

struct PipelineResult {
  std::uint64_t frame_id = 0;
  core::Frame inpainted;
  std::optional<core::Pose6D> pose;
  std::optional<compose::Placement> placement;
  std::optional<core::Frame> composed;
  ResultFlags flags;
  core::StageTimings timings;

  // In-process only; not carried on the wire.
  std::optional<core::InstanceMask> mask;        // binary mask of the tracked instance
  std::optional<core::InstanceMask> silhouette;  // rendered asset, server compose only
  std::optional<gating::BypassPatch> bypass_patch;
};

// Content equality: everything except timings.
bool same_outputs(const PipelineResult& a, const PipelineResult& b);

// One processing lane. Not thread-safe: the owner calls process_frame and
// the control methods from one thread at a time.
class Session {
 public:
  Session(SessionConfig cfg, std::shared_ptr<const compose::AssetStore> assets,
          perception::BackendSet backends = perception::reference_backends());

  // Throws OutOfOrderFrame, or StageFailure wrapping the failing stage.
  PipelineResult process_frame(const core::Frame& frame);

  const SessionConfig& config() const { return cfg_; }
  std::optional<std::uint64_t> last_frame_id() const { return last_frame_id_; }
  const gating::BackgroundCache& cache() const { return cache_; }

  // Control actions, applied between frames.
  void select_object(std::uint32_t u, std::uint32_t v);  // throws NoInstanceAtPoint
  void set_asset(const std::string& asset_id);           // throws UnknownAsset
  void set_gating(bool frame_passer, bool early_stop);
  void set_anchor(compose::ScaleMode mode, std::optional<float> scale);
  // Parses and applies one Control JSON object; throws InvalidConfig on
  // malformed input.
  void apply_control(const nlohmann::json& control);

 private:
  void reset_tracking();

  SessionConfig cfg_;
  std::shared_ptr<const compose::AssetStore> assets_;
  perception::BackendSet backends_;
  const compose::Asset* asset_ = nullptr;

  std::optional<std::uint64_t> last_frame_id_;
  gating::BackgroundCache cache_;
  std::optional<core::InstanceMask> latest_segmentation_;
  std::optional<core::InstanceMask> prev_target_mask_;
  std::optional<perception::PoseFeatures> anchor_features_;
  std::optional<core::Pose6D> last_pose_;
  Eigen::Vector3d last_extent_ = Eigen::Vector3d::Zero();
};

}  // namespace drpipe::pipeline
