#include "drpipe/pipeline/results_io.hpp"

#include "drpipe/core/error.hpp"
#include "drpipe/core/image_io.hpp"
#include "drpipe/core/json.hpp"
#include "drpipe/scenegen/bundle_io.hpp"

namespace drpipe::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using scenegen::indexed_name;

json timings_to_json(const core::StageTimings& t) {
  json j = json::object();
  for (std::size_t s = 0; s < core::kStageCount; ++s) {
    if (auto v = t.get(core::Stage(s))) j[std::string(core::stage_name(core::Stage(s)))] = *v;
  }
  return j;
}

core::StageTimings timings_from_json(const json& j) {
  core::StageTimings t;
  for (const auto& [name, value] : j.items()) {
    if (auto s = core::stage_from_name(name)) t.set(*s, value.get<std::uint64_t>());
  }
  return t;
}

json result_to_json(const PipelineResult& r) {
  json j{{"frame_id", r.frame_id},
         {"flags",
          {{"bypass", r.flags.frame_passer_bypass},
           {"reuse", r.flags.early_stop_reuse},
           {"keyframe", r.flags.keyframe},
           {"no_target", r.flags.no_target}}},
         {"timings", timings_to_json(r.timings)}};
  j["pose"] = r.pose ? core::pose_to_json(*r.pose, true) : json(nullptr);
  j["placement"] = r.placement ? json{{"pose", core::pose_to_json(r.placement->pose, true)}, {"scale", r.placement->scale}}
                               : json(nullptr);
  j["composed"] = r.composed.has_value();
  j["mask"] = r.mask.has_value();
  j["silhouette"] = r.silhouette.has_value();
  return j;
}

void write_results(const fs::path& dir, const StoredResults& stored) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  json frames = json::array();
  for (const auto& r : stored.results) {
    frames.push_back(result_to_json(r));
    const auto id = std::size_t(r.frame_id);
    core::write_ppm(dir / indexed_name("inpainted", id, "ppm"), r.inpainted);
    if (r.composed) core::write_ppm(dir / indexed_name("composed", id, "ppm"), *r.composed);
    if (r.mask) core::write_pgm16(dir / indexed_name("mask", id, "pgm"), *r.mask);
    if (r.silhouette) core::write_pgm16(dir / indexed_name("silhouette", id, "pgm"), *r.silhouette);
  }
  json doc{{"version", 1},
           {"asset_id", stored.asset_id},
           {"bundle_hash", stored.bundle_hash ? json(*stored.bundle_hash) : json(nullptr)},
           {"dropped", stored.dropped_ids},
           {"report", stored.report},
           {"frames", frames}};
  if (!stored.results.empty()) {
    doc["intrinsics"] = core::to_json_value(stored.results.front().inpainted.intrinsics());
  }
  const std::string text = doc.dump(2) + "\n";
  core::write_file(dir / "results.json", std::vector<std::uint8_t>(text.begin(), text.end()));
}

StoredResults read_results(const fs::path& dir) {
  const fs::path path = dir / "results.json";
  if (!fs::exists(path)) fail(ErrorCode::kManifestSchema, "missing " + path.string());
  StoredResults out;
  try {
    const auto bytes = core::read_file(path);
    const json doc = json::parse(bytes.begin(), bytes.end());
    out.asset_id = doc.value("asset_id", std::string("box"));
    if (doc.contains("bundle_hash") && doc["bundle_hash"].is_string()) out.bundle_hash = doc["bundle_hash"];
    out.dropped_ids = doc.value("dropped", std::vector<std::uint64_t>{});
    out.report = doc.value("report", json::object());
    core::PinholeIntrinsics intr{1, 1, 0, 0};
    if (doc.contains("intrinsics")) intr = core::intrinsics_from_json(doc["intrinsics"]);
    for (const auto& f : doc.at("frames")) {
      PipelineResult r;
      r.frame_id = f.at("frame_id").get<std::uint64_t>();
      const auto& fl = f.at("flags");
      r.flags = {fl.value("bypass", false), fl.value("reuse", false), fl.value("keyframe", false),
                 fl.value("no_target", false)};
      r.timings = timings_from_json(f.value("timings", json::object()));
      if (!f.at("pose").is_null()) r.pose = core::pose_from_json(f["pose"]);
      if (!f.at("placement").is_null()) {
        r.placement = compose::Placement{core::pose_from_json(f["placement"].at("pose")),
                                         f["placement"].at("scale").get<float>()};
      }
      const auto id = std::size_t(r.frame_id);
      auto img = core::read_ppm(dir / indexed_name("inpainted", id, "ppm"));
      core::FrameHeader h;
      h.frame_id = r.frame_id;
      h.width = img.width;
      h.height = img.height;
      h.intrinsics = intr;
      r.inpainted = core::Frame(h, std::move(img.rgb));
      if (f.value("composed", false)) {
        r.composed = core::Frame(h, core::read_ppm(dir / indexed_name("composed", id, "ppm")).rgb);
      }
      if (f.value("mask", false)) r.mask = core::read_pgm16(dir / indexed_name("mask", id, "pgm"));
      if (f.value("silhouette", false)) {
        r.silhouette = core::read_pgm16(dir / indexed_name("silhouette", id, "pgm"));
      }
      out.results.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kManifestSchema, std::string("results.json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    fail(ErrorCode::kManifestSchema, std::string("results.json: ") + e.what());
  }
  return out;
}

}  // namespace drpipe::pipeline
