#include "drpipe/pipeline/report.hpp"

#include <algorithm>
#include <cmath>

namespace drpipe::pipeline {

namespace {

template <typename T>
T nearest_rank(std::vector<T> values, double p) {
  if (values.empty()) return T{};
  std::sort(values.begin(), values.end());
  const auto rank = std::size_t(std::ceil(p / 100.0 * double(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

}  // namespace

std::uint64_t percentile(std::vector<std::uint64_t> values, double p) { return nearest_rank(std::move(values), p); }
double percentile(std::vector<double> values, double p) { return nearest_rank(std::move(values), p); }

nlohmann::json percentiles_json(const std::vector<std::uint64_t>& v) {
  return {{"p50", percentile(v, 50)}, {"p95", percentile(v, 95)}, {"p99", percentile(v, 99)}};
}

void RunReportBuilder::add(const PipelineResult& r) { add(r.flags, r.timings); }

void RunReportBuilder::add(const ResultFlags& flags, const core::StageTimings& timings) {
  ++frames_;
  bypass_ += flags.frame_passer_bypass;
  reuse_ += flags.early_stop_reuse;
  for (std::size_t s = 0; s < core::kStageCount; ++s) {
    if (auto v = timings.get(core::Stage(s))) samples_[s].push_back(*v);
  }
}

nlohmann::json RunReportBuilder::to_json() const {
  nlohmann::json stages = nlohmann::json::object();
  for (std::size_t s = 0; s < core::kStageCount; ++s) {
    const auto stage = core::Stage(s);
    if (stage == core::Stage::kTotal || samples_[s].empty()) continue;
    stages[std::string(core::stage_name(stage))] = percentiles_json(samples_[s]);
  }
  const double n = frames_ ? double(frames_) : 1.0;
  return {{"frames", frames_},
          {"dropped", dropped_},
          {"bypass_rate", frames_ ? double(bypass_) / n : 0.0},
          {"reuse_rate", frames_ ? double(reuse_) / n : 0.0},
          {"stage_us", stages},
          {"total_us", percentiles_json(samples_[std::size_t(core::Stage::kTotal)])}};
}

}  // namespace drpipe::pipeline
