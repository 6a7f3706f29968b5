#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "drpipe/scenegen/scene.hpp"

namespace drpipe::scenegen {

// Directory layout: frame_%05d.ppm, bg_%05d.ppm, mask_%05d.pgm,
// depth_%05d.dpt and manifest.json.
void write_bundle(const SequenceBundle& bundle, const std::filesystem::path& dir);
// Throws ManifestSchema for a missing or inconsistent manifest, Io for
// unreadable rasters.
SequenceBundle read_bundle(const std::filesystem::path& dir);

// Exactly the bytes written to manifest.json.
std::string manifest_text(const SequenceBundle& bundle);
// Hex SHA-256 of manifest_text; identifies the scene a report was made on.
std::string bundle_hash(const SequenceBundle& bundle);
std::string sha256_hex(std::string_view data);

std::string indexed_name(const char* prefix, std::size_t index, const char* ext);

// SceneConfig <-> JSON, used by `--generate CFG.json`.
SceneConfig scene_config_from_json(const nlohmann::json& j);
nlohmann::json scene_config_to_json(const SceneConfig& cfg);

}  // namespace drpipe::scenegen
