#include "drpipe/perception/backends.hpp"

namespace drpipe::perception {

namespace {

class ChromaKeySegmenter final : public Segmenter {
 public:
  core::InstanceMask segment(const core::Frame& frame, const TargetSpec& spec) const override {
    return perception::segment(frame, spec);
  }
};

class HarmonicInpainter final : public Inpainter {
 public:
  core::Frame inpaint(const core::Frame& frame, const core::InstanceMask& mask,
                      const InpaintQuality& quality) const override {
    return perception::inpaint(frame, mask, quality);
  }
};

class DepthPcaPoseEstimator final : public PoseEstimator {
 public:
  PoseFeatures coarse(const core::Frame& frame, const core::InstanceMask& mask,
                      std::uint16_t instance) const override {
    return pose_coarse(frame, mask, instance);
  }
  core::Pose6D refine(const PoseFeatures& features, const core::Frame& frame, const core::InstanceMask& mask,
                      std::uint16_t instance) const override {
    return pose_refine(features, frame, mask, instance);
  }
};

}  // namespace

BackendSet reference_backends() {
  return {std::make_shared<ChromaKeySegmenter>(), std::make_shared<HarmonicInpainter>(),
          std::make_shared<DepthPcaPoseEstimator>()};
}

}  // namespace drpipe::perception
