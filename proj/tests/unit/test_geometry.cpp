#include <doctest.h>

#include <cmath>

#include "homoenergetic/geometry.hpp"
#include "homoenergetic/rng.hpp"

using namespace homoenergetic;

namespace {

Vec3 gaussian_vec(Engine& rng, double scale = 1.0)
{
    return scale * Vec3(standard_normal(rng), standard_normal(rng), standard_normal(rng));
}

}  // namespace

TEST_CASE("head-on pair rotated by a right angle")
{
    const auto [vp, vsp] = post_collisional({Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0)});
    CHECK((vp - Vec3(0, 1, 0)).norm() == 0.0);
    CHECK((vsp - Vec3(0, -1, 0)).norm() == 0.0);
}

TEST_CASE("sigma along n is the identity collision")
{
    Engine rng = make_engine(5);
    for (int i = 0; i < 1000; ++i)
    {
        const Vec3 v = gaussian_vec(rng), vs = gaussian_vec(rng);
        const auto [vp, vsp] = post_collisional({v, vs, (v - vs).normalized()});
        CHECK((vp - v).norm() <= 1e-15 * (v.norm() + vs.norm()));
        CHECK((vsp - vs).norm() <= 1e-15 * (v.norm() + vs.norm()));
    }
    const Vec3 v(0.3, -0.2, 1.0);
    const auto [vp, vsp] = post_collisional({v, v, Vec3(0, 0, 1)});
    CHECK(vp == v);
    CHECK(vsp == v);
}

TEST_CASE("random collisions conserve momentum and energy")
{
    Engine rng = make_engine(6);
    for (int i = 0; i < 20000; ++i)
    {
        const double scale = std::pow(10.0, 4.0 * uniform01(rng) - 1.0);
        const Vec3 v = gaussian_vec(rng, scale), vs = gaussian_vec(rng, scale);
        const Vec3 sigma = gaussian_vec(rng).normalized();
        const auto [vp, vsp] = post_collisional({v, vs, sigma});
        const double e = v.squaredNorm() + vs.squaredNorm();
        CHECK(((vp + vsp) - (v + vs)).norm() <= 1e-12 * std::sqrt(e));
        CHECK(std::abs(vp.squaredNorm() + vsp.squaredNorm() - e) <= 1e-12 * e);
        // |v' - v| = |v - v*| sin(theta/2)
        const double cos_theta = (v - vs).normalized().dot(sigma);
        const double half = std::sqrt(std::max(0.0, 0.5 * (1.0 - cos_theta)));
        CHECK((vp - v).norm() == doctest::Approx((v - vs).norm() * half).epsilon(1e-9).scale(1e-12 * scale));
    }
}

TEST_CASE("colliding the outgoing pair back keeps the invariants")
{
    Engine rng = make_engine(7);
    const Vec3 v = gaussian_vec(rng), vs = gaussian_vec(rng);
    const auto [vp, vsp] = post_collisional({v, vs, gaussian_vec(rng).normalized()});
    const auto [v2, vs2] = post_collisional({vp, vsp, (v - vs).normalized()});
    CHECK((v2 - v).norm() < 1e-14);
    CHECK((vs2 - vs).norm() < 1e-14);
}

TEST_CASE("sigma from angles")
{
    const Vec3 z(0, 0, 1);
    CHECK((sigma_from_angles(z, 0.0, 1.234) - z).norm() < 1e-16);
    const Vec3 s = sigma_from_angles(z, M_PI / 2, 0.0);
    CHECK(std::abs(s.z()) < 1e-16);
    CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-15));

    Engine rng = make_engine(8);
    for (int i = 0; i < 10000; ++i)
    {
        const Vec3 n = gaussian_vec(rng).normalized();
        const double theta = M_PI * uniform01(rng), phi = 2 * M_PI * uniform01(rng);
        const Vec3 sig = sigma_from_angles(n, theta, phi);
        CHECK(std::abs(sig.norm() - 1.0) < 1e-12);
        CHECK(std::abs(n.dot(sig) - std::cos(theta)) < 1e-12);
    }
}

TEST_CASE("tangent frame is orthonormal and right-handed")
{
    for (const Vec3& n : {Vec3(1, 0, 0), Vec3(0, -1, 0), Vec3(0.6, 0.0, 0.8), Vec3(1, 1, 1).normalized()})
    {
        Vec3 e1, e2;
        tangent_frame(n, e1, e2);
        CHECK(std::abs(e1.dot(n)) < 1e-15);
        CHECK(std::abs(e2.dot(n)) < 1e-15);
        CHECK(std::abs(e1.dot(e2)) < 1e-15);
        CHECK((e1.cross(e2) - n).norm() < 1e-15);
    }
}
