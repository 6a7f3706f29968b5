#include "drpipe/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "drpipe/core/error.hpp"

namespace drpipe::core {

void PinholeIntrinsics::validate(std::uint32_t width, std::uint32_t height) const {
  if (!(fx > 0.0f) || !(fy > 0.0f) || !std::isfinite(fx) || !std::isfinite(fy)) {
    fail(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (!(cx >= 0.0f) || !(cx < float(width)) || !(cy >= 0.0f) || !(cy < float(height))) {
    fail(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

void Pose6D::validate() const {
  const double n = std::sqrt(double(q.w) * q.w + double(q.x) * q.x + double(q.y) * q.y +
                             double(q.z) * q.z);
  if (!(std::abs(n - 1.0) <= kUnitQuatTolerance)) {
    fail(ErrorCode::kNonUnitQuaternion, "|q| = " + std::to_string(n));
  }
  if (!(confidence >= 0.0f && confidence <= 1.0f)) {
    fail(ErrorCode::kInvalidArgument, "confidence outside [0,1]");
  }
  if (!std::isfinite(t.x) || !std::isfinite(t.y) || !std::isfinite(t.z)) {
    fail(ErrorCode::kNonFiniteFloat, "pose translation");
  }
}

Pose6D identity_pose() { return Pose6D{}; }

bool bit_equal(const Pose6D& a, const Pose6D& b) {
  const float fa[8] = {a.t.x, a.t.y, a.t.z, a.q.w, a.q.x, a.q.y, a.q.z, a.confidence};
  const float fb[8] = {b.t.x, b.t.y, b.t.z, b.q.w, b.q.x, b.q.y, b.q.z, b.confidence};
  return std::memcmp(fa, fb, sizeof(fa)) == 0;
}

Frame::Frame(FrameHeader header, std::vector<std::uint8_t> rgb,
             std::optional<std::vector<float>> depth)
    : header_(header), rgb_(std::move(rgb)), depth_(std::move(depth)) {
  if (header_.width == 0 || header_.height == 0 || header_.width > kMaxImageDim ||
      header_.height > kMaxImageDim) {
    fail(ErrorCode::kInvalidArgument, "frame dimensions out of range");
  }
  const std::size_t n = pixel_count();
  if (rgb_.size() != n * 3) {
    fail(ErrorCode::kDimMismatch, "rgb length " + std::to_string(rgb_.size()) + " != " +
                                      std::to_string(n * 3));
  }
  if (depth_ && depth_->size() != n) {
    fail(ErrorCode::kDimMismatch, "depth length " + std::to_string(depth_->size()) + " != " +
                                      std::to_string(n));
  }
}

std::span<const float> Frame::depth() const {
  if (!depth_) return {};
  return *depth_;
}

Rgb Frame::pixel(std::uint32_t x, std::uint32_t y) const {
  const std::size_t i = (std::size_t(y) * header_.width + x) * 3;
  return Rgb{rgb_[i], rgb_[i + 1], rgb_[i + 2]};
}

Frame Frame::with_rgb(std::vector<std::uint8_t> rgb) const {
  return Frame(header_, std::move(rgb), depth_);
}

Frame Frame::with_header(FrameHeader header) const {
  if (header.width != header_.width || header.height != header_.height) {
    fail(ErrorCode::kDimMismatch, "with_header cannot change dimensions");
  }
  return Frame(header, rgb_, depth_);
}

InstanceMask::InstanceMask(std::uint32_t width, std::uint32_t height,
                           std::vector<std::uint16_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  if (width_ == 0 || height_ == 0 || width_ > kMaxImageDim || height_ > kMaxImageDim) {
    fail(ErrorCode::kInvalidArgument, "mask dimensions out of range");
  }
  if (labels_.size() != std::size_t(width_) * height_) {
    fail(ErrorCode::kDimMismatch, "label length " + std::to_string(labels_.size()) + " != " +
                                      std::to_string(std::size_t(width_) * height_));
  }
  std::uint16_t max_label = 0;
  for (auto l : labels_) max_label = std::max(max_label, l);
  if (max_label > 0) {
    std::vector<bool> seen(std::size_t(max_label) + 1, false);
    for (auto l : labels_) seen[l] = true;
    for (std::size_t l = 1; l <= max_label; ++l) {
      if (!seen[l]) {
        fail(ErrorCode::kInvalidArgument, "label " + std::to_string(l) + " missing below max " +
                                              std::to_string(max_label));
      }
    }
  }
  instance_count_ = max_label;
}

InstanceMask InstanceMask::empty(std::uint32_t width, std::uint32_t height) {
  return InstanceMask(width, height, std::vector<std::uint16_t>(std::size_t(width) * height, 0));
}

std::size_t InstanceMask::count(std::uint16_t label) const {
  return std::size_t(std::count(labels_.begin(), labels_.end(), label));
}

InstanceMask InstanceMask::isolate(std::uint16_t label) const {
  std::vector<std::uint16_t> out(labels_.size(), 0);
  if (label != 0) {
    for (std::size_t i = 0; i < labels_.size(); ++i) out[i] = labels_[i] == label ? 1 : 0;
  }
  return InstanceMask(width_, height_, std::move(out));
}

std::optional<PixelRect> InstanceMask::bounding_box(std::uint16_t label) const {
  PixelRect r{int(width_), int(height_), -1, -1};
  bool any = false;
  for (std::uint32_t y = 0; y < height_; ++y) {
    const std::uint16_t* row = labels_.data() + std::size_t(y) * width_;
    for (std::uint32_t x = 0; x < width_; ++x) {
      if (row[x] != label) continue;
      any = true;
      r.x0 = std::min(r.x0, int(x));
      r.x1 = std::max(r.x1, int(x));
      r.y0 = std::min(r.y0, int(y));
      r.y1 = std::max(r.y1, int(y));
    }
  }
  if (!any) return std::nullopt;
  return r;
}

}  // namespace drpipe::core
