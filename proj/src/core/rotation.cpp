#include "drpipe/core/rotation.hpp"

#include <algorithm>
#include <string>
#include <cmath>
#include <numbers>

#include "drpipe/core/error.hpp"

namespace drpipe::core {

namespace {

void require_unit(const Quatf& q) {
  const double n = std::sqrt(double(q.w) * q.w + double(q.x) * q.x + double(q.y) * q.y +
                             double(q.z) * q.z);
  if (!(std::abs(n - 1.0) <= kUnitQuatTolerance)) {
    fail(ErrorCode::kNonUnitQuaternion, "|q| = " + std::to_string(n));
  }
}

}  // namespace

double quat_geodesic_deg(const Quatf& q1, const Quatf& q2) {
  require_unit(q1);
  require_unit(q2);
  // Relative rotation conj(q1)*q2; atan2 form stays exact at identity where
  // acos of a near-1 dot product loses precision.
  const Eigen::Vector3d v1(q1.x, q1.y, q1.z);
  const Eigen::Vector3d v2(q2.x, q2.y, q2.z);
  const double w = double(q1.w) * q2.w + v1.dot(v2);
  const Eigen::Vector3d v = double(q1.w) * v2 - double(q2.w) * v1 - v1.cross(v2);
  return 2.0 * std::atan2(v.norm(), std::abs(w)) * 180.0 / std::numbers::pi;
}

Eigen::Vector3d to_eigen(const Vec3f& v) { return {v.x, v.y, v.z}; }

Eigen::Quaterniond to_eigen(const Quatf& q) { return Eigen::Quaterniond(q.w, q.x, q.y, q.z); }

Vec3f to_vec3f(const Eigen::Vector3d& v) { return Vec3f{float(v.x()), float(v.y()), float(v.z())}; }

Quatf to_quatf(const Eigen::Quaterniond& q) {
  Eigen::Quaterniond n = q.normalized();
  if (n.w() < 0.0) n.coeffs() = -n.coeffs();
  return Quatf{float(n.w()), float(n.x()), float(n.y()), float(n.z())};
}

Quatf quat_multiply(const Quatf& a, const Quatf& b) { return to_quatf(to_eigen(a) * to_eigen(b)); }

Quatf quat_from_axis_angle(const Eigen::Vector3d& axis, double angle_rad) {
  return to_quatf(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis.normalized())));
}

Pose6D compose_poses(const Pose6D& a, const Pose6D& b) {
  const Eigen::Quaterniond qa = to_eigen(a.q).normalized();
  const Eigen::Vector3d t = qa * to_eigen(b.t) + to_eigen(a.t);
  Pose6D out;
  out.t = to_vec3f(t);
  out.q = to_quatf(qa * to_eigen(b.q));
  out.confidence = std::min(a.confidence, b.confidence);
  return out;
}

Pose6D invert_pose(const Pose6D& p) {
  const Eigen::Quaterniond qi = to_eigen(p.q).normalized().conjugate();
  Pose6D out;
  out.t = to_vec3f(-(qi * to_eigen(p.t)));
  out.q = to_quatf(qi);
  out.confidence = p.confidence;
  return out;
}

}  // namespace drpipe::core
