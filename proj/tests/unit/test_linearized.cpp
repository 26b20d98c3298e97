#include <doctest.h>

#include <cmath>

#include "homoenergetic/errors.hpp"
#include "homoenergetic/linearized.hpp"
#include "homoenergetic/quadrature.hpp"
#include "homoenergetic/rng.hpp"

using namespace homoenergetic;

namespace {

Mat3 shear(double K)
{
    Mat3 A = Mat3::Zero();
    A(0, 1) = K;
    return A;
}

// Independent 3D product Gauss-Hermite integral of g(v) mu(v).
template<class F>
double gaussian_integral(F&& g, int n = 16)
{
    const GaussRule r = gauss_hermite(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < r.size(); ++j)
            for (std::size_t k = 0; k < r.size(); ++k)
                acc += r.weights[i] * r.weights[j] * r.weights[k] * g(Vec3(r.nodes[i], r.nodes[j], r.nodes[k]));
    return acc / std::pow(2.0 * M_PI, 1.5);
}

OracleOptions light_oracle()
{
    OracleOptions o;
    o.radial_panels = 8;
    o.polar_nodes = 12;
    o.azimuth_nodes = 24;
    o.theta_nodes = 12;
    o.phi_nodes = 16;
    return o;
}

}  // namespace

TEST_CASE("Sonine basis is orthonormal in the weighted space")
{
    const SonineTensorBasis basis(8, shear(1.0));
    const Eigen::MatrixXd G = basis_gram(basis);
    CHECK((G - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
    // Orthogonal to the collision invariants
    CHECK(basis_kernel_moments(basis).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(basis.direction().norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(basis.direction().trace()) < 1e-15);
}

TEST_CASE("Gaussian fourth moment identity")
{
    Engine rng = make_engine(3);
    Mat3 A;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            A(i, k) = standard_normal(rng);
    const double quad = gaussian_integral([&](const Vec3& v) { return std::pow(v.dot(A * v), 2); });
    CHECK(gaussian_quartic_moment(A) == doctest::Approx(quad).epsilon(1e-12));
    // Simple shear K = 1: 2 tr(A_s^2) = 1
    CHECK(gaussian_quartic_moment(shear(1.0)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("right-hand side")
{
    const auto k = CollisionKernel::constant_cutoff(0.5);
    const SonineTensorBasis basis(4, shear(1.0));
    const GalerkinSystem zero = assemble_dirichlet(k, basis, Mat3::Zero());
    CHECK(zero.rhs.cwiseAbs().maxCoeff() == 0.0);

    // <(v.Av) mu, (v.Av) mu> = E[(v.A_s v)^2] with phi_0 = (v.Dv) mu / sqrt(g_0) and A_s = |A_s| D
    const Mat3 A = shear(1.0);
    const Mat3 As = 0.5 * (A + A.transpose());
    const GalerkinSystem sys = assemble_dirichlet(k, basis, A);
    const double unnormalized = sys.rhs(0) * std::sqrt(basis.norm_squared(0)) * As.norm();
    const double quad = gaussian_integral([&](const Vec3& v) { return std::pow(v.dot(As * v), 2); });
    CHECK(unnormalized == doctest::Approx(quad).epsilon(1e-10));
    CHECK(unnormalized == doctest::Approx(1.0).epsilon(1e-10));
    for (int n = 1; n < 4; ++n)
        CHECK(std::abs(sys.rhs(n)) < 1e-12);
}

TEST_CASE("Maxwell surrogate: diagonal M and a_bar = K^2 / lambda2")
{
    const auto maxwell = CollisionKernel::constant_cutoff(0.0);
    const GalerkinSystem sys = compute_a_bar(maxwell, shear(1.0), 4);
    Eigen::MatrixXd off = sys.M;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() < 1e-12);

    // lambda2 from brute-force quadrature of L at a point
    const Mat3 As = 0.5 * (shear(1.0) + shear(1.0).transpose());
    const Vec3 v(0.3, 0.8, -0.2);
    const double L = apply_L_oracle(
        maxwell, [&](const Vec3& x) { return x.dot(As * x) * maxwellian(x); }, v, light_oracle());
    const double lambda2 = L / (v.dot(As * v) * maxwellian(v));
    CHECK(sys.M(0, 0) == doctest::Approx(lambda2).epsilon(1e-6));
    CHECK(sys.a_bar == doctest::Approx(1.0 / lambda2).epsilon(1e-6));
    CHECK(sys.a_bar == doctest::Approx(2.0).epsilon(1e-10));
    // Higher Sonine modes have larger eigenvalues.
    for (int n = 1; n < 4; ++n)
        CHECK(sys.M(n, n) > sys.M(n - 1, n - 1));
}

TEST_CASE("oracle annihilates the collision invariants")
{
    const auto k = CollisionKernel::constant_cutoff(0.5);
    const BatchFunction h = [](const Vec3& x, double* out) {
        const double m = maxwellian(x);
        out[0] = m;
        out[1] = x.x() * m;
        out[2] = x.squaredNorm() * m;
    };
    const OracleResult r = apply_L_oracle(k, h, 3, Vec3(0.4, -0.9, 0.2), light_oracle());
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(r.values[i]) < 1e-8 * r.scale);
}

TEST_CASE("a_bar scaling, symmetry and zero forcing")
{
    const auto k = CollisionKernel::constant_cutoff(0.5);
    Mat3 A;
    A << 0.2, 1.0, -0.3, 0.1, -0.5, 0.7, 0.4, 0.0, 0.3;
    const GalerkinSystem base = compute_a_bar(k, A, 4);
    CHECK(compute_a_bar(k, 2.0 * A, 4).a_bar == doctest::Approx(4.0 * base.a_bar).epsilon(1e-12));
    CHECK(compute_a_bar(k, 0.5 * (A + A.transpose()), 4).a_bar == doctest::Approx(base.a_bar).epsilon(1e-12));
    CHECK(compute_a_bar(k, A + 3.0 * Mat3::Identity(), 4).a_bar == doctest::Approx(base.a_bar).epsilon(1e-12));
    CHECK(base.a_bar > 5.0 * base.a_bar_std_err);
    CHECK(base.eigen_min > 0.0);

    const GalerkinSystem zero = compute_a_bar(k, Mat3::Zero(), 4);
    CHECK(zero.a_bar == 0.0);
    CHECK(zero.coeffs.cwiseAbs().maxCoeff() == 0.0);

    // Isotropy: a(A) = a_hat |dev sym A|^2
    CHECK(base.a_bar == doctest::Approx(a_hat(k, 4) * dev_sym(A).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("a_bar for the reference kernels")
{
    const auto cut = CollisionKernel::constant_cutoff(0.5);
    const double a8 = compute_a_bar(cut, shear(1.0), 8).a_bar;
    CHECK(a8 == doctest::Approx(1.06681622976).epsilon(1e-9));
    const double a4 = compute_a_bar(cut, shear(1.0), 4).a_bar;
    CHECK(std::abs(a8 - a4) / a8 < 1e-5);

    const auto nc = CollisionKernel::non_cutoff(0.5, 0.25, 1.0, 0.02);
    CHECK(compute_a_bar(nc, shear(1.0), 4).a_bar == doctest::Approx(0.1212793).epsilon(1e-6));
}

TEST_CASE("Monte Carlo assembly agrees with quadrature")
{
    const auto k = CollisionKernel::constant_cutoff(0.5);
    AssemblyOptions mc;
    mc.method = AssemblyMethod::MonteCarlo;
    mc.samples = 400000;
    mc.seed = 99;
    const GalerkinSystem m = compute_a_bar(k, shear(1.0), 2, mc);
    const GalerkinSystem q = compute_a_bar(k, shear(1.0), 2);
    CHECK(std::abs(m.a_bar - q.a_bar) < 4.0 * m.a_bar_std_err);
    CHECK(m.a_bar_std_err < 0.02 * m.a_bar);
    // Same seed, same numbers
    CHECK(compute_a_bar(k, shear(1.0), 2, mc).a_bar == m.a_bar);
}

TEST_CASE("first-order correction moments")
{
    const auto k = CollisionKernel::constant_cutoff(0.5);
    const Mat3 A = shear(1.0);
    const GalerkinSystem sys = compute_a_bar(k, A, 6);
    const SonineTensorBasis basis(6, A);
    const double eta = 40.0;
    const MuBarMoments m = mu_bar_moments(sys.coeffs, basis, eta, A);
    CHECK(std::abs(m.mass) < 1e-12);
    CHECK(m.momentum.norm() < 1e-12);
    CHECK(std::abs(m.energy) < 1e-12);
    CHECK(m.driven == doctest::Approx(-sys.a_bar / eta).epsilon(1e-10));
    CHECK(m.shear12 < 0.0);
    // Independent quadrature of the evaluated mu_bar
    const double driven = gaussian_integral(
        [&](const Vec3& v) { return v.dot(A * v) * evaluate_mu_bar(sys.coeffs, basis, eta, v) / maxwellian(v); }, 24);
    CHECK(driven == doctest::Approx(-sys.a_bar / eta).epsilon(1e-8));

    Eigen::VectorXd none = Eigen::VectorXd::Zero(6);
    CHECK(evaluate_mu_bar(none, basis, eta, Vec3(0.1, 0.2, 0.3)) == 0.0);
}

TEST_CASE("solve rejects an indefinite matrix")
{
    const auto k = CollisionKernel::constant_cutoff(0.5);
    GalerkinSystem sys = assemble_dirichlet(k, SonineTensorBasis(3, shear(1.0)), shear(1.0));
    sys.M(1, 1) = -1.0;
    CHECK_THROWS_AS(solve_first_order(sys), NonPositiveDefiniteError);
}
