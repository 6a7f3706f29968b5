#pragma once

#include <json.hpp>

#include "drpipe/core/types.hpp"

namespace drpipe::core {

// [x,y,z], [w,x,y,z], {t,q} and {fx,fy,cx,cy}. Readers throw
// nlohmann::json exceptions on shape errors; callers map them to their own
// schema error.
nlohmann::json to_json_value(const Vec3f& v);
nlohmann::json to_json_value(const Quatf& q);
nlohmann::json to_json_value(const Rgb& c);
nlohmann::json to_json_value(const PinholeIntrinsics& intr);
nlohmann::json pose_to_json(const Pose6D& p, bool with_confidence = false);

Vec3f vec3f_from_json(const nlohmann::json& j);
Quatf quatf_from_json(const nlohmann::json& j);
Rgb rgb_from_json(const nlohmann::json& j);
PinholeIntrinsics intrinsics_from_json(const nlohmann::json& j);
Pose6D pose_from_json(const nlohmann::json& j);

}  // namespace drpipe::core
