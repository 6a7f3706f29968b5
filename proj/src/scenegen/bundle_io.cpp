#include "drpipe/scenegen/bundle_io.hpp"

#include <array>
#include <cstdio>

#include <openssl/evp.h>

#include "drpipe/core/error.hpp"
#include "drpipe/core/image_io.hpp"
#include "drpipe/core/json.hpp"

namespace drpipe::scenegen {

using nlohmann::json;
namespace fs = std::filesystem;

std::string indexed_name(const char* prefix, std::size_t index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05zu.%s", prefix, index, ext);
  return buf;
}

namespace {

json manifest_json(const SequenceBundle& b) {
  if (b.frames.empty()) fail(ErrorCode::kInvalidArgument, "bundle has no frames");
  const auto& f0 = b.frames.front();
  json poses = json::array();
  json cam_poses = json::array();
  json ts = json::array();
  for (std::size_t i = 0; i < b.frames.size(); ++i) {
    poses.push_back(core::pose_to_json(b.gt_poses[i]));
    cam_poses.push_back(core::pose_to_json(b.frames[i].camera_pose()));
    ts.push_back(b.frames[i].header().capture_ts_us);
  }
  json sym = json::array();
  for (const auto& q : b.symmetry_group) sym.push_back(core::to_json_value(q));
  json colors = json::array();
  for (const auto& c : b.meta.object.face_colors) colors.push_back(core::to_json_value(c));
  const auto& e = b.meta.object.extents;
  return json{
      {"version", 1},
      {"width", f0.width()},
      {"height", f0.height()},
      {"frame_count", b.frames.size()},
      {"intrinsics", core::to_json_value(f0.intrinsics())},
      {"poses", poses},
      {"camera_poses", cam_poses},
      {"symmetry", sym},
      {"seed", b.meta.seed},
      {"fps", b.meta.fps},
      {"capture_ts_us", ts},
      {"object", {{"extents", {e.x(), e.y(), e.z()}}, {"face_colors", colors}}},
  };
}

core::Frame frame_from_image(const core::FrameHeader& header, const core::RgbImage& img,
                             std::optional<std::vector<float>> depth) {
  if (img.width != header.width || img.height != header.height) {
    fail(ErrorCode::kManifestSchema, "raster dimensions disagree with manifest");
  }
  return core::Frame(header, img.rgb, std::move(depth));
}

}  // namespace

std::string manifest_text(const SequenceBundle& bundle) { return manifest_json(bundle).dump(2) + "\n"; }

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

std::string bundle_hash(const SequenceBundle& bundle) { return sha256_hex(manifest_text(bundle)); }

void write_bundle(const SequenceBundle& b, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < b.frames.size(); ++i) {
    core::write_ppm(dir / indexed_name("frame", i, "ppm"), b.frames[i]);
    core::write_ppm(dir / indexed_name("bg", i, "ppm"), b.gt_backgrounds[i]);
    core::write_pgm16(dir / indexed_name("mask", i, "pgm"), b.gt_masks[i]);
    core::write_depth(dir / indexed_name("depth", i, "dpt"), b.frames[i]);
  }
  const std::string text = manifest_text(b);
  core::write_file(dir / "manifest.json",
                   std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SequenceBundle read_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) fail(ErrorCode::kManifestSchema, "missing " + manifest_path.string());
  const auto bytes = core::read_file(manifest_path);
  SequenceBundle b;
  std::vector<core::FrameHeader> headers;
  try {
    const json m = json::parse(bytes.begin(), bytes.end());
    if (m.at("version").get<int>() != 1) fail(ErrorCode::kManifestSchema, "unsupported manifest version");
    const auto width = m.at("width").get<std::uint32_t>();
    const auto height = m.at("height").get<std::uint32_t>();
    const auto count = m.at("frame_count").get<std::size_t>();
    const auto intr = core::intrinsics_from_json(m.at("intrinsics"));
    const auto& poses = m.at("poses");
    const auto& cam_poses = m.at("camera_poses");
    if (!poses.is_array() || poses.size() != count) fail(ErrorCode::kManifestSchema, "pose count != frame_count");
    if (!cam_poses.is_array() || cam_poses.size() != count) {
      fail(ErrorCode::kManifestSchema, "camera pose count != frame_count");
    }
    b.meta.seed = m.at("seed").get<std::uint64_t>();
    b.meta.fps = m.value("fps", 30.0);
    if (m.contains("object")) {
      const auto& e = m["object"].at("extents");
      b.meta.object.extents = {e.at(0).get<double>(), e.at(1).get<double>(), e.at(2).get<double>()};
      const auto& colors = m["object"].at("face_colors");
      if (!colors.is_array() || colors.size() != 6) fail(ErrorCode::kManifestSchema, "object needs 6 face colors");
      for (std::size_t i = 0; i < 6; ++i) b.meta.object.face_colors[i] = core::rgb_from_json(colors[i]);
    }
    for (const auto& q : m.at("symmetry")) b.symmetry_group.push_back(core::quatf_from_json(q));
    for (std::size_t i = 0; i < count; ++i) {
      core::FrameHeader h;
      h.frame_id = i;
      h.capture_ts_us = m.contains("capture_ts_us") ? m["capture_ts_us"].at(i).get<std::uint64_t>()
                                                    : std::uint64_t(std::llround(double(i) * 1e6 / b.meta.fps));
      h.width = width;
      h.height = height;
      h.intrinsics = intr;
      h.camera_pose = core::pose_from_json(cam_poses[i]);
      headers.push_back(h);
      b.gt_poses.push_back(core::pose_from_json(poses[i]));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kManifestSchema, e.what());
  } catch (const std::invalid_argument& e) {
    fail(ErrorCode::kManifestSchema, e.what());
  }
  for (std::size_t i = 0; i < headers.size(); ++i) {
    auto depth = core::read_depth(dir / indexed_name("depth", i, "dpt"));
    if (depth.width != headers[i].width || depth.height != headers[i].height) {
      fail(ErrorCode::kManifestSchema, "depth dimensions disagree with manifest");
    }
    b.frames.push_back(frame_from_image(headers[i], core::read_ppm(dir / indexed_name("frame", i, "ppm")),
                                        std::move(depth.depth)));
    b.gt_backgrounds.push_back(
        frame_from_image(headers[i], core::read_ppm(dir / indexed_name("bg", i, "ppm")), std::nullopt));
    auto mask = core::read_pgm16(dir / indexed_name("mask", i, "pgm"));
    if (mask.width() != headers[i].width || mask.height() != headers[i].height) {
      fail(ErrorCode::kManifestSchema, "mask dimensions disagree with manifest");
    }
    b.gt_masks.push_back(std::move(mask));
  }
  return b;
}

namespace {

BackgroundKind background_kind_from(const std::string& s) {
  if (s == "checkerboard") return BackgroundKind::kCheckerboard;
  if (s == "gradient") return BackgroundKind::kGradient;
  if (s == "noise_texture") return BackgroundKind::kNoiseTexture;
  fail(ErrorCode::kInvalidConfig, "unknown background kind '" + s + "'");
}

const char* background_kind_name(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::kCheckerboard: return "checkerboard";
    case BackgroundKind::kGradient: return "gradient";
    case BackgroundKind::kNoiseTexture: return "noise_texture";
  }
  return "?";
}

}  // namespace

SceneConfig scene_config_from_json(const json& j) {
  SceneConfig cfg = default_scene_config();
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.width = j.value("width", cfg.width);
    cfg.height = j.value("height", cfg.height);
    cfg.frame_count = j.value("frame_count", cfg.frame_count);
    cfg.fps = j.value("fps", cfg.fps);
    if (j.contains("intrinsics")) cfg.intrinsics = core::intrinsics_from_json(j["intrinsics"]);
    if (j.contains("background")) cfg.background_kind = background_kind_from(j["background"].get<std::string>());
    if (j.contains("background_change") && !j["background_change"].is_null()) {
      const auto& c = j["background_change"];
      cfg.background_change = BackgroundChange{c.at("frame").get<std::uint32_t>(),
                                               background_kind_from(c.at("kind").get<std::string>())};
    }
    cfg.noise_k = j.value("noise_k", cfg.noise_k);
    if (j.contains("object")) {
      const auto& o = j["object"];
      if (o.contains("extents")) {
        const auto& e = o["extents"];
        if (!e.is_array() || e.size() != 3) fail(ErrorCode::kInvalidConfig, "object extents need 3 values");
        cfg.object.extents = {e[0].get<double>(), e[1].get<double>(), e[2].get<double>()};
      }
      if (o.contains("face_colors")) {
        const auto& c = o["face_colors"];
        if (!c.is_array() || c.size() != 6) fail(ErrorCode::kInvalidConfig, "object needs 6 face colors");
        for (std::size_t i = 0; i < 6; ++i) cfg.object.face_colors[i] = core::rgb_from_json(c[i]);
      }
    }
    if (j.contains("trajectory")) {
      const auto& t = j["trajectory"];
      const auto kind = t.at("kind").get<std::string>();
      if (kind == "static") {
        cfg.trajectory = StaticTrajectory{t.contains("pose") ? core::pose_from_json(t["pose"]) : default_object_pose()};
      } else if (kind == "linear") {
        cfg.trajectory = LinearTrajectory{core::pose_from_json(t.at("start")), core::pose_from_json(t.at("end"))};
      } else if (kind == "orbit") {
        OrbitTrajectory o;
        o.center = core::vec3f_from_json(t.at("center"));
        o.radius_m = t.at("radius_m").get<double>();
        o.angular_speed_deg_per_frame = t.at("angular_speed_deg_per_frame").get<double>();
        if (t.contains("q")) o.rotation = core::quatf_from_json(t["q"]);
        cfg.trajectory = o;
      } else {
        fail(ErrorCode::kInvalidConfig, "unknown trajectory kind '" + kind + "'");
      }
    }
    if (j.contains("camera_motion")) {
      const auto& c = j["camera_motion"];
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "static") {
        cfg.camera_motion = StaticCamera{c.contains("pose") ? core::pose_from_json(c["pose"]) : core::identity_pose()};
      } else if (kind == "linear") {
        cfg.camera_motion = LinearCamera{core::pose_from_json(c.at("start")), core::pose_from_json(c.at("end"))};
      } else {
        fail(ErrorCode::kInvalidConfig, "unknown camera motion '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidConfig, e.what());
  } catch (const std::invalid_argument& e) {
    fail(ErrorCode::kInvalidConfig, e.what());
  }
  cfg.validate();
  return cfg;
}

json scene_config_to_json(const SceneConfig& cfg) {
  json colors = json::array();
  for (const auto& c : cfg.object.face_colors) colors.push_back(core::to_json_value(c));
  const auto& e = cfg.object.extents;
  json j{
      {"seed", cfg.seed},
      {"width", cfg.width},
      {"height", cfg.height},
      {"frame_count", cfg.frame_count},
      {"fps", cfg.fps},
      {"intrinsics", core::to_json_value(cfg.intrinsics)},
      {"background", background_kind_name(cfg.background_kind)},
      {"noise_k", cfg.noise_k},
      {"object", {{"extents", {e.x(), e.y(), e.z()}}, {"face_colors", colors}}},
  };
  j["background_change"] = cfg.background_change
                               ? json{{"frame", cfg.background_change->frame},
                                      {"kind", background_kind_name(cfg.background_change->kind)}}
                               : json(nullptr);
  if (const auto* s = std::get_if<StaticTrajectory>(&cfg.trajectory)) {
    j["trajectory"] = {{"kind", "static"}, {"pose", core::pose_to_json(s->pose)}};
  } else if (const auto* l = std::get_if<LinearTrajectory>(&cfg.trajectory)) {
    j["trajectory"] = {{"kind", "linear"}, {"start", core::pose_to_json(l->start)}, {"end", core::pose_to_json(l->end)}};
  } else {
    const auto& o = std::get<OrbitTrajectory>(cfg.trajectory);
    j["trajectory"] = {{"kind", "orbit"},
                       {"center", core::to_json_value(o.center)},
                       {"radius_m", o.radius_m},
                       {"angular_speed_deg_per_frame", o.angular_speed_deg_per_frame},
                       {"q", core::to_json_value(o.rotation)}};
  }
  if (const auto* s = std::get_if<StaticCamera>(&cfg.camera_motion)) {
    j["camera_motion"] = {{"kind", "static"}, {"pose", core::pose_to_json(s->pose)}};
  } else {
    const auto& l = std::get<LinearCamera>(cfg.camera_motion);
    j["camera_motion"] = {{"kind", "linear"}, {"start", core::pose_to_json(l.start)}, {"end", core::pose_to_json(l.end)}};
  }
  return j;
}

}  // namespace drpipe::scenegen
