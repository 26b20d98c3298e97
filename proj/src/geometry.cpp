#include "homoenergetic/geometry.hpp"

#include <cmath>

namespace homoenergetic {

std::pair<Vec3, Vec3> post_collisional(const CollisionPair& pair)
{
    const Vec3 center = 0.5 * (pair.v + pair.v_star);
    const double half_speed = 0.5 * (pair.v - pair.v_star).norm();
    const Vec3 offset = half_speed * pair.sigma;
    return {center + offset, center - offset};
}

void tangent_frame(const Vec3& n, Vec3& e1, Vec3& e2)
{
    const double ax = std::abs(n.x()), ay = std::abs(n.y()), az = std::abs(n.z());
    // Branch on the largest component: cross n with the axis of the smallest one.
    Vec3 axis;
    if (ax >= ay && ax >= az)
        axis = ay <= az ? Vec3::UnitY() : Vec3::UnitZ();
    else if (ay >= az)
        axis = ax <= az ? Vec3::UnitX() : Vec3::UnitZ();
    else
        axis = ax <= ay ? Vec3::UnitX() : Vec3::UnitY();
    e1 = n.cross(axis).normalized();
    e2 = n.cross(e1);
}

Vec3 sigma_from_cos_sin(const Vec3& n, double cos_theta, double sin_theta, double cos_phi, double sin_phi)
{
    Vec3 e1, e2;
    tangent_frame(n, e1, e2);
    return cos_theta * n + sin_theta * (cos_phi * e1 + sin_phi * e2);
}

Vec3 sigma_from_angles(const Vec3& n, double theta, double phi)
{
    return sigma_from_cos_sin(n, std::cos(theta), std::sin(theta), std::cos(phi), std::sin(phi));
}

}  // namespace homoenergetic
