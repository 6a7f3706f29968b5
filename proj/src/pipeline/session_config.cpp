#include "drpipe/pipeline/session_config.hpp"

#include "drpipe/core/error.hpp"
#include "drpipe/core/json.hpp"
#include "drpipe/core/palette.hpp"

namespace drpipe::pipeline {

using nlohmann::json;

perception::TargetSpec SessionConfig::default_target() {
  perception::TargetSpec t;
  t.key_colors.assign(core::kDefaultFaceColors.begin(), core::kDefaultFaceColors.end());
  return t;
}

void SessionConfig::validate() const {
  target.validate();
  anchor.validate();
  gating.validate();
  if (queue_capacity < 1) fail(ErrorCode::kInvalidConfig, "queue_capacity must be >= 1");
  if (asset_id.empty()) fail(ErrorCode::kInvalidConfig, "asset_id must not be empty");
  if (!(budget.target_fps > 0.0)) fail(ErrorCode::kInvalidConfig, "target fps must be positive");
}

json gating_config_to_json(const gating::GatingConfig& g) {
  return {{"frame_passer", g.frame_passer_enabled},
          {"early_stop", g.early_stop_enabled},
          {"tile_px", g.tile_px},
          {"tau_cover", g.tau_cover},
          {"pose_eps_t", g.pose_eps_t},
          {"pose_eps_r", g.pose_eps_r},
          {"keyframe_interval", g.keyframe_interval},
          {"es_sigma_t", g.es_sigma_t},
          {"es_sigma_e", g.es_sigma_e},
          {"es_threshold", g.es_threshold},
          {"region_dilation_px", g.region_dilation_px}};
}

gating::GatingConfig gating_config_from_json(const json& j, gating::GatingConfig g) {
  if (!j.is_object()) fail(ErrorCode::kInvalidConfig, "gating must be an object");
  g.frame_passer_enabled = j.value("frame_passer", g.frame_passer_enabled);
  g.early_stop_enabled = j.value("early_stop", g.early_stop_enabled);
  g.tile_px = j.value("tile_px", g.tile_px);
  g.tau_cover = j.value("tau_cover", g.tau_cover);
  g.pose_eps_t = j.value("pose_eps_t", g.pose_eps_t);
  g.pose_eps_r = j.value("pose_eps_r", g.pose_eps_r);
  g.keyframe_interval = j.value("keyframe_interval", g.keyframe_interval);
  g.es_sigma_t = j.value("es_sigma_t", g.es_sigma_t);
  g.es_sigma_e = j.value("es_sigma_e", g.es_sigma_e);
  g.es_threshold = j.value("es_threshold", g.es_threshold);
  g.region_dilation_px = j.value("region_dilation_px", g.region_dilation_px);
  return g;
}

namespace {

compose::ScaleMode scale_mode_from(const std::string& s) {
  if (s == "fit_extent") return compose::ScaleMode::kFitExtent;
  if (s == "fixed_scale") return compose::ScaleMode::kFixedScale;
  fail(ErrorCode::kInvalidConfig, "unknown anchor mode '" + s + "'");
}

}  // namespace

SessionConfig session_config_from_json(const json& j) {
  SessionConfig cfg;
  try {
    if (!j.is_object()) fail(ErrorCode::kInvalidConfig, "session config must be a JSON object");
    if (j.contains("target")) {
      const auto& t = j["target"];
      if (t.contains("key_colors")) {
        cfg.target.key_colors.clear();
        for (const auto& c : t["key_colors"]) cfg.target.key_colors.push_back(core::rgb_from_json(c));
      }
      const int tol = t.value("tolerance", int(cfg.target.tolerance));
      if (tol < 0 || tol > 255) fail(ErrorCode::kInvalidConfig, "tolerance must be in 0..255");
      cfg.target.tolerance = std::uint8_t(tol);
      cfg.target.instance_id = t.value("instance_id", cfg.target.instance_id);
      cfg.target.min_instance_px = t.value("min_instance_px", cfg.target.min_instance_px);
    }
    cfg.asset_id = j.value("asset_id", cfg.asset_id);
    if (j.contains("anchor")) {
      const auto& a = j["anchor"];
      if (a.contains("mode")) cfg.anchor.mode = scale_mode_from(a["mode"].get<std::string>());
      cfg.anchor.fixed_scale = a.value("scale", cfg.anchor.fixed_scale);
      if (a.contains("align")) {
        const auto s = a["align"].get<std::string>();
        if (s == "full_pose") {
          cfg.anchor.align = compose::AlignMode::kFullPose;
        } else if (s == "translation_only") {
          cfg.anchor.align = compose::AlignMode::kTranslationOnly;
        } else {
          fail(ErrorCode::kInvalidConfig, "unknown anchor align '" + s + "'");
        }
      }
    }
    if (j.contains("gating")) cfg.gating = gating_config_from_json(j["gating"], cfg.gating);
    if (j.contains("target_fps")) {
      const double fps = j["target_fps"].get<double>();
      if (!(fps > 0.0)) fail(ErrorCode::kInvalidConfig, "target_fps must be positive");
      cfg.budget = core::budget_for_fps(fps);
    }
    if (j.contains("compose_location")) {
      const auto s = j["compose_location"].get<std::string>();
      if (s == "server") {
        cfg.compose_location = ComposeLocation::kServer;
      } else if (s == "client") {
        cfg.compose_location = ComposeLocation::kClient;
      } else {
        fail(ErrorCode::kInvalidConfig, "compose_location must be server or client");
      }
    }
    cfg.queue_capacity = j.value("queue_capacity", cfg.queue_capacity);
    cfg.inpaint_iters = j.value("inpaint_iters", cfg.inpaint_iters);
    cfg.parallel_branches = j.value("parallel_branches", cfg.parallel_branches);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidConfig, e.what());
  } catch (const std::invalid_argument& e) {
    fail(ErrorCode::kInvalidConfig, e.what());
  }
  cfg.validate();
  return cfg;
}

json session_config_to_json(const SessionConfig& cfg) {
  json colors = json::array();
  for (const auto& c : cfg.target.key_colors) colors.push_back(core::to_json_value(c));
  return {
      {"target",
       {{"key_colors", colors},
        {"tolerance", cfg.target.tolerance},
        {"instance_id", cfg.target.instance_id},
        {"min_instance_px", cfg.target.min_instance_px}}},
      {"asset_id", cfg.asset_id},
      {"anchor",
       {{"mode", cfg.anchor.mode == compose::ScaleMode::kFitExtent ? "fit_extent" : "fixed_scale"},
        {"scale", cfg.anchor.fixed_scale},
        {"align", cfg.anchor.align == compose::AlignMode::kFullPose ? "full_pose" : "translation_only"}}},
      {"gating", gating_config_to_json(cfg.gating)},
      {"target_fps", cfg.budget.target_fps},
      {"compose_location", cfg.compose_location == ComposeLocation::kServer ? "server" : "client"},
      {"queue_capacity", cfg.queue_capacity},
      {"inpaint_iters", cfg.inpaint_iters},
      {"parallel_branches", cfg.parallel_branches},
  };
}

}  // namespace drpipe::pipeline
