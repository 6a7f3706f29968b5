#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "drpipe/core/timing.hpp"
#include "drpipe/pipeline/session.hpp"

namespace drpipe::pipeline {

// Nearest-rank percentile (p in (0, 100]) of an unsorted sample; 0 for an
// empty sample.
std::uint64_t percentile(std::vector<std::uint64_t> values, double p);
double percentile(std::vector<double> values, double p);

// Accumulates processed results into the run report:
// {frames, dropped, bypass_rate, reuse_rate,
//  stage_us: {stage: {p50, p95, p99}}, total_us: {p50, p95, p99}}.
class RunReportBuilder {
 public:
  void add(const PipelineResult& result);
  void add(const ResultFlags& flags, const core::StageTimings& timings);
  void add_dropped(std::uint64_t n = 1) { dropped_ += n; }

  std::uint64_t frames() const { return frames_; }
  std::uint64_t dropped() const { return dropped_; }
  nlohmann::json to_json() const;

 private:
  std::uint64_t frames_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t bypass_ = 0;
  std::uint64_t reuse_ = 0;
  std::array<std::vector<std::uint64_t>, core::kStageCount> samples_;
};

nlohmann::json percentiles_json(const std::vector<std::uint64_t>& values);

}  // namespace drpipe::pipeline
