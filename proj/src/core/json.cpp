#include "drpipe/core/json.hpp"

#include <stdexcept>

namespace drpipe::core {

using nlohmann::json;

json to_json_value(const Vec3f& v) { return json::array({v.x, v.y, v.z}); }
json to_json_value(const Quatf& q) { return json::array({q.w, q.x, q.y, q.z}); }
json to_json_value(const Rgb& c) { return json::array({c.r, c.g, c.b}); }
json to_json_value(const PinholeIntrinsics& i) {
  return json{{"fx", i.fx}, {"fy", i.fy}, {"cx", i.cx}, {"cy", i.cy}};
}

json pose_to_json(const Pose6D& p, bool with_confidence) {
  json j{{"t", to_json_value(p.t)}, {"q", to_json_value(p.q)}};
  if (with_confidence) j["confidence"] = p.confidence;
  return j;
}

namespace {
void require_array(const json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) throw std::invalid_argument(std::string(what) + ": expected array of " + std::to_string(n));
}
}  // namespace

Vec3f vec3f_from_json(const json& j) {
  require_array(j, 3, "vec3");
  return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
}

Quatf quatf_from_json(const json& j) {
  require_array(j, 4, "quaternion");
  return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>(), j[3].get<float>()};
}

Rgb rgb_from_json(const json& j) {
  require_array(j, 3, "rgb");
  auto c = [&](std::size_t i) {
    const int v = j[i].get<int>();
    if (v < 0 || v > 255) throw std::invalid_argument("rgb component out of range");
    return std::uint8_t(v);
  };
  return {c(0), c(1), c(2)};
}

PinholeIntrinsics intrinsics_from_json(const json& j) {
  return {j.at("fx").get<float>(), j.at("fy").get<float>(), j.at("cx").get<float>(), j.at("cy").get<float>()};
}

Pose6D pose_from_json(const json& j) {
  Pose6D p;
  p.t = vec3f_from_json(j.at("t"));
  p.q = quatf_from_json(j.at("q"));
  p.confidence = j.contains("confidence") ? j["confidence"].get<float>() : 1.0f;
  return p;
}

}  // namespace drpipe::core
