#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "homoenergetic/deformation.hpp"
#include "homoenergetic/errors.hpp"
#include "homoenergetic/quadrature.hpp"
#include "homoenergetic/rng.hpp"

using namespace homoenergetic;

TEST_CASE("nilpotent generator gives a constant deformation")
{
    Mat3 L0 = Mat3::Zero();
    L0(0, 1) = 1.0;
    const auto f = DeformationFamily::exact(L0);
    for (double t : {0.0, 1.0, 17.0, 900.0})
        CHECK((evaluate_L(f, t) - L0).norm() < 1e-14);

    const auto ss = DeformationFamily::simple_shear(2.0);
    Mat3 expected = Mat3::Zero();
    expected(0, 1) = 2.0;
    CHECK((evaluate_L(ss, 5.0) - expected).norm() == 0.0);
}

TEST_CASE("singular generator")
{
    const auto f = DeformationFamily::exact(-Mat3::Identity(), 10.0);
    CHECK_THROWS_AS(f.validate(), ConfigError);
    CHECK_THROWS_AS(evaluate_L(f, 1.0), SingularMatrixError);
    CHECK_THROWS_AS(evaluate_L(DeformationFamily::simple_shear(1.0, 10.0), 11.0), PreconditionError);
}

TEST_CASE("trace split")
{
    const TraceSplit id = trace_split(Mat3::Identity());
    CHECK(id.A.norm() == 0.0);
    CHECK(id.b == 1.0);

    const auto dd = DeformationFamily::decaying_dilatation(0.0, 1.0, 0.0, 1.0);
    CHECK(trace_split(evaluate_L(dd, 0.0)).b == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const auto ss = DeformationFamily::simple_shear(1.5);
    const TraceSplit s = trace_split(evaluate_L(ss, 3.0));
    CHECK(s.b == 0.0);
    CHECK((s.A - evaluate_L(ss, 3.0)).norm() == 0.0);
}

TEST_CASE("density of the canonical families")
{
    const auto ss = DeformationFamily::simple_shear(1.0);
    const auto dd = DeformationFamily::decaying_dilatation(0.0, 1.0, 0.0, 1.0);
    for (double t : {0.0, 0.5, 4.0, 250.0})
    {
        CHECK(density_and_flow(ss, t).rho == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(density_and_flow(dd, t).rho == doctest::Approx(1.0 / (1.0 + t)).epsilon(1e-13));
    }
}

TEST_CASE("density from a random generator matches the trace quadrature")
{
    Engine rng = make_engine(21);
    for (int trial = 0; trial < 5; ++trial)
    {
        Mat3 L0;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k)
                L0(i, k) = 0.5 * standard_normal(rng);
        // Shift the spectrum so det(I + t L0) stays positive on the horizon.
        const double shift = L0.eigenvalues().real().minCoeff();
        if (shift < 0.1)
            L0 += (0.1 - shift) * Mat3::Identity();
        const auto f = DeformationFamily::exact(L0, 100.0);
        REQUIRE_NOTHROW(f.validate());
        for (double t : {0.3, 2.0, 50.0})
        {
            const double rho = density_and_flow(f, t).rho;
            CHECK(rho * (Mat3::Identity() + t * L0).determinant() == doctest::Approx(1.0).epsilon(1e-12));
            const double tr = integrate_adaptive([&](double s) { return evaluate_L(f, s).trace(); }, 0.0, t, 1e-11);
            CHECK(rho == doctest::Approx(std::exp(-tr)).epsilon(1e-9));
        }
    }
}

TEST_CASE("L solves L' + L^2 = 0 and flows compose")
{
    const DeformationFamily families[] = {DeformationFamily::combined_shear(1.0, 0.3, 2.0),
                                          DeformationFamily::decaying_dilatation(0.5, 1.0, -0.5, 1.5)};
    for (const auto& f : families)
        for (double t : {0.2, 3.0, 60.0})
        {
            const double h = 1e-5 * (1.0 + t);
            const Mat3 dL = (evaluate_L(f, t + h) - evaluate_L(f, t - h)) / (2 * h);
            const Mat3 L = evaluate_L(f, t);
            CHECK((dL + L * L).norm() < 1e-6 * std::max(1.0, L.squaredNorm()));
            const Mat3 whole = exact_flow(f, 0.0, t);
            CHECK((exact_flow(f, 0.4 * t, t) * exact_flow(f, 0.0, 0.4 * t) - whole).norm() < 1e-12 * whole.norm());
            CHECK((density_and_flow(f, t).P - whole).norm() < 1e-12 * whole.norm());
        }
}

TEST_CASE("combined shear entry (1,3) decays linearly")
{
    const auto f = DeformationFamily::combined_shear(2.0, 1.0, 3.0);
    CHECK(evaluate_L(f, 0.0)(0, 2) == doctest::Approx(1.0));
    CHECK(evaluate_L(f, 0.0)(0, 1) == doctest::Approx(3.0));
    // L0^3 = 0, so (I + t L0)^-1 = I - t L0 + t^2 L0^2 and L_t = L0 - t L0^2.
    const Mat3 L0 = f.L0;
    for (double t : {1.0, 10.0})
        CHECK((evaluate_L(f, t) - (L0 - t * L0 * L0)).norm() < 1e-12 * (1 + t));
}

TEST_CASE("dilatation remainder")
{
    const auto ideal = DeformationFamily::decaying_dilatation(0.7, 1.0, 0.4, 1.0);
    for (double t : {0.0, 1.0, 100.0})
        CHECK(std::abs(r_remainder(ideal, t)) < 1e-15);
    CHECK(std::abs(r_integral(ideal).value) < 1e-12);
    CHECK(r_integral_closed_form(ideal) == 0.0);

    const auto slow = DeformationFamily::decaying_dilatation(0.0, 1.0, 0.0, 2.0);
    double bound = 0.0;
    for (int k = 0; k <= 300; ++k)
    {
        const double t = std::pow(10.0, 3.0 * k / 300.0) - 1.0;
        bound = std::max(bound, std::abs(r_remainder(slow, t)) * (1 + t) * (1 + t));
    }
    CHECK(bound < 10.0);
    const RemainderIntegral ri = r_integral(slow);
    CHECK(ri.value == doctest::Approx(std::log(2.0)).epsilon(1e-5));
    CHECK(r_integral_closed_form(slow) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(r_remainder(DeformationFamily::simple_shear(1.0), 1.0), FamilyMismatchError);
}

TEST_CASE("midpoint flow approximates the exact flow to second order")
{
    const auto f = DeformationFamily::decaying_dilatation(0.5, 1.0, 0.5, 1.0);
    const double e1 = (midpoint_flow(f, 1.0, 1.1) - exact_flow(f, 1.0, 1.1)).norm();
    const double e2 = (midpoint_flow(f, 1.0, 1.05) - exact_flow(f, 1.0, 1.05)).norm();
    CHECK(e1 / e2 == doctest::Approx(8.0).epsilon(0.1));
}

TEST_CASE("family validation")
{
    CHECK_THROWS_AS(DeformationFamily::simple_shear(0.0).validate(), ConfigError);
    CHECK_THROWS_AS(DeformationFamily::combined_shear(0.0, 1.0, 1.0).validate(), ConfigError);
    CHECK_THROWS_AS(DeformationFamily::decaying_dilatation(0.0, 1.0, 0.0, -1.0).validate(), ConfigError);
    CHECK_NOTHROW(DeformationFamily::zero().validate());
    CHECK(DeformationFamily::combined_shear(1, 0, 1).name() == "combined_orthogonal_shear");
}
