#include "drpipe/pipeline/session.hpp"

#include <future>
#include <string>
#include <type_traits>
#include <utility>

#include "drpipe/core/error.hpp"

namespace drpipe::pipeline {

using core::Stage;

std::uint8_t ResultFlags::bits() const {
  return std::uint8_t((frame_passer_bypass ? 1u : 0u) | (early_stop_reuse ? 2u : 0u) | (keyframe ? 4u : 0u) |
                      (no_target ? 8u : 0u));
}

ResultFlags ResultFlags::from_bits(std::uint8_t b) {
  return {(b & 1u) != 0, (b & 2u) != 0, (b & 4u) != 0, (b & 8u) != 0};
}

bool same_outputs(const PipelineResult& a, const PipelineResult& b) {
  const bool poses = a.pose.has_value() == b.pose.has_value() && (!a.pose || core::bit_equal(*a.pose, *b.pose));
  return a.frame_id == b.frame_id && a.inpainted == b.inpainted && poses && a.placement == b.placement &&
         a.composed == b.composed && a.flags == b.flags && a.mask == b.mask && a.silhouette == b.silhouette;
}

namespace {

// Runs one stage, records its duration and wraps any failure as
// StageFailure naming the stage.
template <typename F>
auto run_stage(Stage stage, core::StageTimings& timings, F&& fn) {
  core::Stopwatch sw;
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
      fn();
      timings.set(stage, sw.elapsed_us());
    } else {
      auto out = fn();
      timings.set(stage, sw.elapsed_us());
      return out;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kStageFailure) throw;
    fail(ErrorCode::kStageFailure, std::string(core::stage_name(stage)) + ": " + e.what());
  } catch (const std::exception& e) {
    fail(ErrorCode::kStageFailure, std::string(core::stage_name(stage)) + ": " + e.what());
  }
}

// Outputs carry colour only; depth stays with the input frame.
core::Frame color_only(const core::Frame& f) {
  return core::Frame(f.header(), std::vector<std::uint8_t>(f.rgb().begin(), f.rgb().end()));
}

struct Branch3D {
  perception::PoseFeatures features;
  core::Pose6D pose;
  Eigen::Vector3d extent = Eigen::Vector3d::Zero();
  bool reuse = false;
  core::StageTimings timings;
};

}  // namespace

Session::Session(SessionConfig cfg, std::shared_ptr<const compose::AssetStore> assets,
                 perception::BackendSet backends)
    : cfg_(std::move(cfg)), assets_(std::move(assets)), backends_(std::move(backends)) {
  cfg_.validate();
  if (!assets_) assets_ = std::make_shared<compose::AssetStore>();
  if (!backends_.segmenter || !backends_.inpainter || !backends_.pose_estimator) {
    fail(ErrorCode::kInvalidArgument, "backend set is incomplete");
  }
  asset_ = &assets_->get(cfg_.asset_id);
}

void Session::reset_tracking() {
  prev_target_mask_.reset();
  anchor_features_.reset();
  last_pose_.reset();
  last_extent_.setZero();
}

PipelineResult Session::process_frame(const core::Frame& frame) {
  if (last_frame_id_ && frame.frame_id() <= *last_frame_id_) {
    fail(ErrorCode::kOutOfOrderFrame,
         "frame " + std::to_string(frame.frame_id()) + " after " + std::to_string(*last_frame_id_));
  }
  last_frame_id_ = frame.frame_id();

  core::Stopwatch total;
  const auto& g = cfg_.gating;
  PipelineResult r;
  r.frame_id = frame.frame_id();

  // (a) frame passer
  std::optional<core::PixelRect> region;
  if (prev_target_mask_) region = gating::predict_region(*prev_target_mask_, 1, g.region_dilation_px);
  gating::GateDecision2D gate;
  if (g.frame_passer_enabled) {
    gate = run_stage(Stage::kGate2d, r.timings,
                     [&] { return gating::frame_passer_decide(cache_, g, frame.camera_pose(), region); });
  }

  core::InstanceMask full;
  core::InstanceMask target;
  if (gate.bypass) {
    target = *prev_target_mask_;
  } else {
    full = run_stage(Stage::kSegment, r.timings, [&] { return backends_.segmenter->segment(frame, cfg_.target); });
    if (full.count(cfg_.target.instance_id) == 0) {
      r.flags.no_target = true;
      r.inpainted = color_only(frame);
      if (cfg_.compose_location == ComposeLocation::kServer) r.composed = r.inpainted;
      if (g.frame_passer_enabled) {
        gating::cache_update(cache_, g, frame, full, frame.camera_pose(), gating::GatePath::kForward);
        r.flags.keyframe = true;
      }
      latest_segmentation_ = std::move(full);
      reset_tracking();
      r.mask = core::InstanceMask::empty(frame.width(), frame.height());
      r.timings.set(Stage::kTotal, total.elapsed_us());
      return r;
    }
    target = full.isolate(cfg_.target.instance_id);
  }

  // 2D output: pasted cache patch, or inpainting (possibly on its own thread).
  auto inpaint_job = [&] {
    core::StageTimings t;
    auto out = run_stage(Stage::kInpaint, t, [&] {
      return color_only(
          backends_.inpainter->inpaint(frame, target, perception::InpaintQuality::fast(cfg_.inpaint_iters)));
    });
    return std::make_pair(std::move(out), t);
  };
  std::future<std::pair<core::Frame, core::StageTimings>> inpaint_future;
  std::optional<core::Frame> inpainted;
  if (gate.bypass) {
    std::vector<std::uint8_t> rgb(frame.rgb().begin(), frame.rgb().end());
    gate.patch->paste_into(rgb, frame.width());
    inpainted = core::Frame(frame.header(), std::move(rgb));
    r.flags.frame_passer_bypass = true;
    r.bypass_patch = std::move(gate.patch);
  } else if (cfg_.parallel_branches) {
    inpaint_future = std::async(std::launch::async, inpaint_job);
  } else {
    auto [out, t] = inpaint_job();
    inpainted = std::move(out);
    r.timings.set(Stage::kInpaint, *t.get(Stage::kInpaint));
  }

  // (b) 3D branch on the current thread.
  auto pose_branch = [&] {
    Branch3D b;
    b.features = run_stage(Stage::kPoseCoarse, b.timings,
                           [&] { return backends_.pose_estimator->coarse(frame, target, 1); });
    gating::GateDecision3D es;
    if (g.early_stop_enabled) {
      es = run_stage(Stage::kGate3d, b.timings,
                     [&] { return gating::early_stop_decide(anchor_features_, b.features, last_pose_, g); });
    }
    if (es.reuse) {
      b.reuse = true;
      b.pose = *es.pose;
      b.extent = last_extent_;
    } else {
      run_stage(Stage::kPoseRefine, b.timings, [&] {
        b.pose = backends_.pose_estimator->refine(b.features, frame, target, 1);
        b.extent = perception::observed_extent(perception::backproject(frame, target, 1), b.pose);
      });
    }
    return b;
  };
  std::optional<Branch3D> branch;
  try {
    branch = pose_branch();
  } catch (...) {
    if (inpaint_future.valid()) inpaint_future.wait();
    throw;
  }
  if (inpaint_future.valid()) {
    auto [out, t] = inpaint_future.get();
    inpainted = std::move(out);
    r.timings.set(Stage::kInpaint, *t.get(Stage::kInpaint));
  }
  for (Stage s : {Stage::kPoseCoarse, Stage::kGate3d, Stage::kPoseRefine}) {
    if (auto v = branch->timings.get(s)) r.timings.set(s, *v);
  }

  // (c) merge barrier
  r.inpainted = std::move(*inpainted);
  r.pose = branch->pose;
  r.flags.early_stop_reuse = branch->reuse;
  run_stage(Stage::kCompose, r.timings, [&] {
    r.placement = compose::map_pose(branch->pose, branch->extent, *asset_, cfg_.anchor);
    if (cfg_.compose_location == ComposeLocation::kServer) {
      auto out = compose::render_asset(r.inpainted, *asset_, *r.placement, frame.intrinsics());
      r.composed = std::move(out.frame);
      r.silhouette = std::move(out.silhouette);
    }
  });

  // Commit per-session state only after every stage succeeded.
  if (g.frame_passer_enabled) {
    if (gate.bypass) {
      gating::cache_update(cache_, g, frame, target, frame.camera_pose(), gating::GatePath::kBypass);
    } else {
      gating::cache_update(cache_, g, frame, full, frame.camera_pose(), gating::GatePath::kForward);
      gating::cache_store_fill(cache_, r.inpainted, target, gating::predict_region(target, 1, g.region_dilation_px));
      r.flags.keyframe = true;
    }
  }
  if (!gate.bypass) latest_segmentation_ = std::move(full);
  if (!branch->reuse) {
    anchor_features_ = branch->features;
    last_pose_ = branch->pose;
    last_extent_ = branch->extent;
  }
  r.mask = target;
  prev_target_mask_ = std::move(target);
  r.timings.set(Stage::kTotal, total.elapsed_us());
  return r;
}

void Session::select_object(std::uint32_t u, std::uint32_t v) {
  if (!latest_segmentation_ || u >= latest_segmentation_->width() || v >= latest_segmentation_->height()) {
    fail(ErrorCode::kNoInstanceAtPoint, "no segmentation covers (" + std::to_string(u) + "," + std::to_string(v) + ")");
  }
  const std::uint16_t label = latest_segmentation_->at(u, v);
  if (label == 0) {
    fail(ErrorCode::kNoInstanceAtPoint, "no instance at (" + std::to_string(u) + "," + std::to_string(v) + ")");
  }
  cfg_.target.instance_id = label;
  reset_tracking();
}

void Session::set_asset(const std::string& asset_id) {
  asset_ = &assets_->get(asset_id);
  cfg_.asset_id = asset_id;
}

void Session::set_gating(bool frame_passer, bool early_stop) {
  cfg_.gating.frame_passer_enabled = frame_passer;
  cfg_.gating.early_stop_enabled = early_stop;
  if (!frame_passer) cache_ = gating::BackgroundCache();
}

void Session::set_anchor(compose::ScaleMode mode, std::optional<float> scale) {
  compose::AnchorPolicy next = cfg_.anchor;
  next.mode = mode;
  if (scale) next.fixed_scale = *scale;
  next.validate();
  cfg_.anchor = next;
}

void Session::apply_control(const nlohmann::json& c) {
  std::string action;
  try {
    action = c.at("action").get<std::string>();
    if (action == "select_object") {
      const auto u = c.at("u").get<std::int64_t>();
      const auto v = c.at("v").get<std::int64_t>();
      if (u < 0 || v < 0) fail(ErrorCode::kNoInstanceAtPoint, "negative pixel coordinate");
      select_object(std::uint32_t(u), std::uint32_t(v));
    } else if (action == "set_asset") {
      set_asset(c.at("asset_id").get<std::string>());
    } else if (action == "set_gating") {
      set_gating(c.value("frame_passer", cfg_.gating.frame_passer_enabled),
                 c.value("early_stop", cfg_.gating.early_stop_enabled));
    } else if (action == "set_anchor") {
      const auto mode = c.at("mode").get<std::string>();
      std::optional<float> scale;
      if (c.contains("scale") && !c["scale"].is_null()) scale = c["scale"].get<float>();
      if (mode == "fit_extent") {
        set_anchor(compose::ScaleMode::kFitExtent, scale);
      } else if (mode == "fixed_scale") {
        set_anchor(compose::ScaleMode::kFixedScale, scale);
      } else {
        fail(ErrorCode::kInvalidConfig, "unknown anchor mode '" + mode + "'");
      }
    } else {
      fail(ErrorCode::kInvalidConfig, "unknown control action '" + action + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidConfig, "malformed control '" + action + "': " + e.what());
  }
}

}  // namespace drpipe::pipeline
