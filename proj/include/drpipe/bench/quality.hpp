#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "drpipe/compose/asset.hpp"
#include "drpipe/pipeline/session.hpp"
#include "drpipe/scenegen/scene.hpp"

namespace drpipe::bench {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// PSNR in dB over the pixels where `region` is nonzero, all three channels:
// 10*log10(255^2 / MSE), +infinity when MSE is 0.
// Throws DimMismatch, EmptyRegion.
double psnr_region(const core::Frame& a, const core::Frame& b, const core::InstanceMask& region);

// |A & B| / |A | B| for A = {a == label_a}, B = {b == label_b}; 1 when both
// sets are empty. Throws DimMismatch.
double mask_iou(const core::InstanceMask& a, const core::InstanceMask& b, std::uint16_t label_a = 1,
                std::uint16_t label_b = 1);

// Minimum geodesic angle between est and gt*s over the symmetry group.
double symmetric_rotation_error_deg(const core::Quatf& est, const core::Quatf& gt,
                                    const std::vector<core::Quatf>& symmetry_group);

enum class Metric : std::size_t {
  kInpaintPsnr,
  kMaskIou,
  kPoseTranslationError,
  kPoseRotationError,
  kTemporalFlicker,
  kSilhouetteIou,
};
inline constexpr std::size_t kMetricCount = 6;
inline constexpr std::array<Metric, kMetricCount> kAllMetrics = {
    Metric::kInpaintPsnr,     Metric::kMaskIou,         Metric::kPoseTranslationError,
    Metric::kPoseRotationError, Metric::kTemporalFlicker, Metric::kSilhouetteIou};

std::string_view metric_name(Metric m);
// True for metrics where a larger value is better.
bool higher_is_better(Metric m);

// One value per metric, absent where the metric is undefined for the frame.
struct FrameQuality {
  std::uint64_t frame_id = 0;
  std::array<std::optional<double>, kMetricCount> values;

  std::optional<double>& operator[](Metric m) { return values[std::size_t(m)]; }
  const std::optional<double>& operator[](Metric m) const { return values[std::size_t(m)]; }
};

struct Aggregate {
  double mean = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  std::size_t count = 0;
};

struct QualityReport {
  std::string bundle_hash;
  std::size_t frames = 0;   // results evaluated
  std::size_t dropped = 0;  // bundle frames without a result
  std::vector<FrameQuality> per_frame;
  std::array<std::optional<Aggregate>, kMetricCount> aggregates;  // absent when no frame defines it
  double bypass_rate = 0.0;
  double reuse_rate = 0.0;
  double drop_rate = 0.0;

  const std::optional<Aggregate>& aggregate(Metric m) const { return aggregates[std::size_t(m)]; }

  // {bundle_hash, frames, dropped, metrics: {name: {mean, p50, p95} | null},
  //  rates: {bypass, reuse, drop}, per_frame: [{frame_id, name: value}]}.
  // Infinite values are written as null.
  nlohmann::json to_json() const;
};

struct EvalOptions {
  // Used to re-render the asset silhouette for results that carry a
  // placement but no silhouette.
  std::shared_ptr<const compose::AssetStore> assets;
  std::string asset_id = "box";
};

// Results must be in increasing frame_id order, each naming a bundle frame
// with matching dimensions; bundle frames without a result count as dropped.
// Throws Misaligned.
QualityReport evaluate(const std::vector<pipeline::PipelineResult>& results, const scenegen::SequenceBundle& bundle,
                       const EvalOptions& options = {});

// Allowed worsening of each metric's mean before compare() reports a regression.
double tolerance(Metric m);
// Allowed increase of the drop rate.
inline constexpr double kDropTolerance = 0.01;

struct Comparison {
  nlohmann::json json;
  std::string table;
  std::vector<std::string> regressions;
};

// Deltas are b - a for every aggregate and rate. Reads the JSON form of a
// report so saved reports compare directly. Throws BundleMismatch.
Comparison compare(const nlohmann::json& a, const nlohmann::json& b);

}  // namespace drpipe::bench
