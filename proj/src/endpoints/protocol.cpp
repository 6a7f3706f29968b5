#include "drpipe/endpoints/protocol.hpp"

#include <vector>

namespace drpipe::endpoints {

WireError wire_error_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoInstanceAtPoint: return WireError::kNoInstanceAtPoint;
    case ErrorCode::kUnknownAsset: return WireError::kUnknownAsset;
    case ErrorCode::kOutOfOrderFrame: return WireError::kOutOfOrderFrame;
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidArgument: return WireError::kInvalidControl;
    default: return WireError::kStageFailure;
  }
}

transport::ErrorMsg error_msg(WireError code, const std::string& detail) {
  return transport::ErrorMsg{std::uint16_t(code), detail};
}

transport::ResultMsg to_result_msg(const pipeline::PipelineResult& r) {
  transport::ResultMsg m;
  m.frame_id = r.frame_id;
  m.flags = r.flags.bits();
  m.pose = r.pose;
  if (r.placement) {
    m.placement_pose = r.placement->pose;
    m.placement_scale = r.placement->scale;
  }
  m.timings = r.timings;
  m.width = r.inpainted.width();
  m.height = r.inpainted.height();
  m.inpainted_rgb.assign(r.inpainted.rgb().begin(), r.inpainted.rgb().end());
  if (r.composed) m.composed_rgb.emplace(r.composed->rgb().begin(), r.composed->rgb().end());
  return m;
}

pipeline::PipelineResult from_result_msg(const transport::ResultMsg& m, const core::FrameHeader& sent) {
  if (m.frame_id != sent.frame_id || m.width != sent.width || m.height != sent.height) {
    fail(ErrorCode::kProtocolError, "result " + std::to_string(m.frame_id) + " does not match the frame sent");
  }
  pipeline::PipelineResult r;
  r.frame_id = m.frame_id;
  r.inpainted = core::Frame(sent, m.inpainted_rgb);
  if (m.composed_rgb) r.composed = core::Frame(sent, *m.composed_rgb);
  r.flags = pipeline::ResultFlags::from_bits(m.flags);
  r.timings = m.timings;
  if (m.pose) {
    r.pose = m.pose;
    r.placement = compose::Placement{m.placement_pose, m.placement_scale};
  }
  return r;
}

void compose_on_device(pipeline::PipelineResult& r, const compose::AssetStore& assets, const std::string& asset_id) {
  if (r.composed) return;
  if (!r.placement) {
    r.composed = r.inpainted;
    return;
  }
  auto out = compose::render_asset(r.inpainted, assets.get(asset_id), *r.placement, r.inpainted.intrinsics());
  r.composed = std::move(out.frame);
}

}  // namespace drpipe::endpoints
