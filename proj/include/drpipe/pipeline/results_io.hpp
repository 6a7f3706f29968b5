#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drpipe/pipeline/session.hpp"

namespace drpipe::pipeline {

// A results directory: results.json plus inpainted_%05d.ppm and, when
// present, composed_%05d.ppm, mask_%05d.pgm and silhouette_%05d.pgm.
struct StoredResults {
  std::string asset_id = "box";
  std::optional<std::string> bundle_hash;
  std::vector<PipelineResult> results;
  std::vector<std::uint64_t> dropped_ids;
  nlohmann::json report = nlohmann::json::object();
};

nlohmann::json result_to_json(const PipelineResult& r);
nlohmann::json timings_to_json(const core::StageTimings& t);
core::StageTimings timings_from_json(const nlohmann::json& j);

void write_results(const std::filesystem::path& dir, const StoredResults& stored);
// Throws Io or ManifestSchema.
StoredResults read_results(const std::filesystem::path& dir);

}  // namespace drpipe::pipeline
