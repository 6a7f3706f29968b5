#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "drpipe/core/types.hpp"

namespace drpipe::core {

// Geodesic angle on SO(3) in degrees, 2*acos(|q1.q2|), in [0,180].
// Throws NonUnitQuaternion if either input is off the unit sphere by >1e-6.
double quat_geodesic_deg(const Quatf& q1, const Quatf& q2);

Eigen::Vector3d to_eigen(const Vec3f& v);
Eigen::Quaterniond to_eigen(const Quatf& q);
Vec3f to_vec3f(const Eigen::Vector3d& v);
// Normalizes in double precision and canonicalizes to w >= 0.
Quatf to_quatf(const Eigen::Quaterniond& q);

Quatf quat_multiply(const Quatf& a, const Quatf& b);
Quatf quat_from_axis_angle(const Eigen::Vector3d& axis, double angle_rad);

// Rigid transforms as (R,t) with x' = R x + t.
Pose6D compose_poses(const Pose6D& a, const Pose6D& b);
Pose6D invert_pose(const Pose6D& p);

}  // namespace drpipe::core
