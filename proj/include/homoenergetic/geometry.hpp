#pragma once

#include <utility>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace homoenergetic {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct CollisionPair
{
    Vec3 v;
    Vec3 v_star;
    Vec3 sigma;  //!< unit vector
};

/*!
 * Post-collisional velocities in the sigma representation:
 * v' = (v+v*)/2 + |v-v*| sigma/2, v'* = (v+v*)/2 - |v-v*| sigma/2.
 */
std::pair<Vec3, Vec3> post_collisional(const CollisionPair& pair);

/*!
 * Unit vector sigma with n . sigma = cos(theta), azimuth phi in a fixed
 * orthonormal frame around n.
 *
 * The frame branches on the largest |component| of n: the first tangent is
 * n crossed with the axis of the smaller remaining component. This keeps it
 * well conditioned and fully deterministic.
 */
Vec3 sigma_from_angles(const Vec3& n, double theta, double phi);

//! Same as sigma_from_angles with precomputed cos/sin values.
Vec3 sigma_from_cos_sin(const Vec3& n, double cos_theta, double sin_theta, double cos_phi, double sin_phi);

//! Orthonormal tangents (e1, e2) with (e1, e2, n) right-handed.
void tangent_frame(const Vec3& n, Vec3& e1, Vec3& e2);

}  // namespace homoenergetic
