#pragma once

#include <memory>
#include <vector>

#include <json.hpp>

#include "drpipe/pipeline/session.hpp"
#include "drpipe/scenegen/scene.hpp"

namespace drpipe::pipeline {

struct EndToEndRun {
  std::vector<PipelineResult> results;
  nlohmann::json report;
};

// Offline harness: every frame of the bundle, in order, through one session.
EndToEndRun end_to_end_once(const scenegen::SequenceBundle& bundle, const SessionConfig& cfg,
                            std::shared_ptr<const compose::AssetStore> assets = nullptr);

}  // namespace drpipe::pipeline
