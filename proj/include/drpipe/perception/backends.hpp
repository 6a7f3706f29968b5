#pragma once

#include <memory>

#include "drpipe/perception/inpaint.hpp"
#include "drpipe/perception/pose.hpp"
#include "drpipe/perception/segment.hpp"

namespace drpipe::perception {

// Stage interfaces. Implementations must be deterministic and safe to call
// from several sessions at once.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual core::InstanceMask segment(const core::Frame& frame, const TargetSpec& spec) const = 0;
};

class Inpainter {
 public:
  virtual ~Inpainter() = default;
  virtual core::Frame inpaint(const core::Frame& frame, const core::InstanceMask& mask,
                              const InpaintQuality& quality) const = 0;
};

class PoseEstimator {
 public:
  virtual ~PoseEstimator() = default;
  virtual PoseFeatures coarse(const core::Frame& frame, const core::InstanceMask& mask,
                              std::uint16_t instance) const = 0;
  virtual core::Pose6D refine(const PoseFeatures& features, const core::Frame& frame,
                              const core::InstanceMask& mask, std::uint16_t instance) const = 0;
};

struct BackendSet {
  std::shared_ptr<const Segmenter> segmenter;
  std::shared_ptr<const Inpainter> inpainter;
  std::shared_ptr<const PoseEstimator> pose_estimator;
};

// Chroma-key segmentation, harmonic inpainting and depth PCA pose.
BackendSet reference_backends();

}  // namespace drpipe::perception
