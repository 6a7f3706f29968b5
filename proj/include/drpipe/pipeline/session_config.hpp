#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "drpipe/compose/placement.hpp"
#include "drpipe/core/timing.hpp"
#include "drpipe/gating/gating.hpp"
#include "drpipe/perception/inpaint.hpp"
#include "drpipe/perception/segment.hpp"

namespace drpipe::pipeline {

enum class ComposeLocation { kServer, kClient };

struct SessionConfig {
  perception::TargetSpec target = default_target();
  std::string asset_id = "box";
  compose::AnchorPolicy anchor;
  gating::GatingConfig gating;
  core::LatencyBudget budget;
  ComposeLocation compose_location = ComposeLocation::kServer;
  std::uint32_t queue_capacity = 2;
  std::uint32_t inpaint_iters = 64;
  // Run the 2D inpainting and the 3D branch on separate threads.
  bool parallel_branches = true;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;

  void validate() const;
  static perception::TargetSpec default_target();
};

// JSON form used in Hello payloads and --session files. Missing keys keep
// their defaults; malformed values throw InvalidConfig.
//
// {
//   "target": {"key_colors": [[r,g,b], ...], "tolerance": 12, "instance_id": 1, "min_instance_px": 16},
//   "asset_id": "box",
//   "anchor": {"mode": "fit_extent" | "fixed_scale", "scale": 1.0, "align": "full_pose" | "translation_only"},
//   "gating": {"frame_passer": true, "early_stop": true, "tile_px": 16, ...},
//   "target_fps": 30,
//   "compose_location": "server" | "client",
//   "queue_capacity": 2,
//   "inpaint_iters": 64,
//   "parallel_branches": true
// }
SessionConfig session_config_from_json(const nlohmann::json& j);
nlohmann::json session_config_to_json(const SessionConfig& cfg);

nlohmann::json gating_config_to_json(const gating::GatingConfig& cfg);
gating::GatingConfig gating_config_from_json(const nlohmann::json& j, gating::GatingConfig base = {});

}  // namespace drpipe::pipeline
