#pragma once

#include <cstdint>

#include "drpipe/compose/asset.hpp"
#include "drpipe/core/error.hpp"
#include "drpipe/pipeline/session.hpp"
#include "drpipe/transport/codec.hpp"

namespace drpipe::endpoints {

// ErrorMsg codes sent by the server.
enum class WireError : std::uint16_t {
  kUnsupportedVersion = 1000,
  kSessionLimit = 1001,
  kBadHello = 1002,
  kNoInstanceAtPoint = 1003,
  kUnknownAsset = 1004,
  kUnexpectedMessage = 1005,
  kDecodeError = 1006,
  kOutOfOrderFrame = 1007,
  kUnknownSession = 1008,
  kInvalidControl = 1009,
  kStageFailure = 2000,
};

// Code for a failure raised while applying a Control or processing a frame.
WireError wire_error_for(ErrorCode code);

transport::ErrorMsg error_msg(WireError code, const std::string& detail);

transport::ResultMsg to_result_msg(const pipeline::PipelineResult& r);

// Rebuilds a result from the wire using the header of the frame that was
// sent. Mask, silhouette and bypass patch do not travel; poses decode with
// confidence 1. Throws ProtocolError when the raster does not match `sent`.
pipeline::PipelineResult from_result_msg(const transport::ResultMsg& m, const core::FrameHeader& sent);

// Device-side composition for compose_location == client: renders the asset
// over the inpainted frame, or passes the inpainted frame through when there
// is no placement. No-op when `r` already carries a composed frame.
void compose_on_device(pipeline::PipelineResult& r, const compose::AssetStore& assets, const std::string& asset_id);

}  // namespace drpipe::endpoints
