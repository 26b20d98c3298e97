#include "homoenergetic/deformation.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "homoenergetic/errors.hpp"
#include "homoenergetic/quadrature.hpp"

namespace homoenergetic {

DeformationFamily DeformationFamily::exact(const Mat3& L0, double horizon)
{
    DeformationFamily f;
    f.mode = FamilyMode::ExactFromL0;
    f.L0 = L0;
    f.horizon = horizon;
    return f;
}

DeformationFamily DeformationFamily::zero(double horizon)
{
    return exact(Mat3::Zero(), horizon);
}

DeformationFamily DeformationFamily::simple_shear(double K, double horizon)
{
    DeformationFamily f;
    f.mode = FamilyMode::SimpleShear;
    f.K = K;
    f.horizon = horizon;
    f.L0 = f.generator();
    return f;
}

DeformationFamily DeformationFamily::combined_shear(double K1, double K2, double K3, double horizon)
{
    DeformationFamily f;
    f.mode = FamilyMode::CombinedShear;
    f.K1 = K1;
    f.K2 = K2;
    f.K3 = K3;
    f.horizon = horizon;
    f.L0 = f.generator();
    return f;
}

DeformationFamily DeformationFamily::decaying_dilatation(double K1, double K2, double K3, double dilatation_rate,
                                                         double horizon)
{
    DeformationFamily f;
    f.mode = FamilyMode::DecayingDilatation;
    f.K1 = K1;
    f.K2 = K2;
    f.K3 = K3;
    f.dilatation_rate = dilatation_rate;
    f.horizon = horizon;
    f.L0 = f.generator();
    return f;
}

Mat3 DeformationFamily::generator() const
{
    Mat3 g = Mat3::Zero();
    switch (mode)
    {
    case FamilyMode::ExactFromL0:
        return L0;
    case FamilyMode::SimpleShear:
        g(0, 1) = K;
        return g;
    case FamilyMode::CombinedShear:
        g(0, 1) = K3;
        g(0, 2) = K2;
        g(1, 2) = K1;
        return g;
    case FamilyMode::DecayingDilatation:
    {
        const double l = dilatation_rate;
        g(0, 1) = K2 + l * K1 * K3;
        g(0, 2) = l * K1;
        g(2, 1) = l * K3;
        g(2, 2) = l;
        return g;
    }
    }
    return g;
}

void DeformationFamily::validate() const
{
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ConfigError("family horizon must be a positive finite number");
    switch (mode)
    {
    case FamilyMode::SimpleShear:
        if (K == 0.0)
            throw ConfigError("simple shear needs K != 0");
        break;
    case FamilyMode::CombinedShear:
        if (K1 * K3 == 0.0)
            throw ConfigError("combined orthogonal shear needs K1 K3 != 0");
        break;
    case FamilyMode::DecayingDilatation:
        if (K2 == 0.0)
            throw ConfigError("decaying dilatation needs K2 != 0");
        if (!(dilatation_rate > 0.0))
            throw ConfigError("dilatation_rate must be positive");
        break;
    case FamilyMode::ExactFromL0:
        break;
    }
    // det(I + t L0) = prod (1 + t lambda_i) vanishes only at t = -1/lambda for real negative lambda.
    Eigen::EigenSolver<Mat3> es(generator());
    for (int i = 0; i < 3; ++i)
    {
        const auto lam = es.eigenvalues()(i);
        if (std::abs(lam.imag()) <= 1e-12 * (1.0 + std::abs(lam.real())) && lam.real() < 0.0)
        {
            const double t_sing = -1.0 / lam.real();
            if (t_sing <= horizon)
                throw ConfigError("det(I + t L0) vanishes at t = " + std::to_string(t_sing) +
                                  " inside the horizon");
        }
    }
}

std::string DeformationFamily::name() const
{
    switch (mode)
    {
    case FamilyMode::ExactFromL0:
        return "exact_from_L0";
    case FamilyMode::SimpleShear:
        return "simple_shear";
    case FamilyMode::CombinedShear:
        return "combined_orthogonal_shear";
    case FamilyMode::DecayingDilatation:
        return "decaying_dilatation";
    }
    return "unknown";
}

namespace {

void check_time(const DeformationFamily& family, double t)
{
    if (!(t >= 0.0))
        throw DomainError("time must be nonnegative");
    if (t > family.horizon * (1.0 + 1e-12))
        throw PreconditionError("time exceeds the family horizon");
}

Mat3 resolvent_base(const DeformationFamily& family, double t)
{
    const Mat3 M = Mat3::Identity() + t * family.generator();
    const double det = M.determinant();
    if (!(det > 0.0))
        throw SingularMatrixError("det(I + t L0) <= 0 at t = " + std::to_string(t));
    return M;
}

}  // namespace

Mat3 evaluate_L(const DeformationFamily& family, double t)
{
    check_time(family, t);
    Mat3 L = Mat3::Zero();
    switch (family.mode)
    {
    case FamilyMode::ExactFromL0:
    {
        const Mat3 M = resolvent_base(family, t);
        return family.L0 * M.inverse();
    }
    case FamilyMode::SimpleShear:
        L(0, 1) = family.K;
        return L;
    case FamilyMode::CombinedShear:
        L(0, 1) = family.K3;
        L(0, 2) = family.K2 - t * family.K1 * family.K3;
        L(1, 2) = family.K1;
        return L;
    case FamilyMode::DecayingDilatation:
    {
        const double l = family.dilatation_rate;
        const double decay = l / (1.0 + l * t);
        L(0, 1) = family.K2 + decay * family.K1 * family.K3;
        L(0, 2) = decay * family.K1;
        L(2, 1) = decay * family.K3;
        L(2, 2) = decay;
        return L;
    }
    }
    return L;
}

TraceSplit trace_split(const Mat3& L)
{
    const double b = L.trace() / 3.0;
    Mat3 A = L;
    A.diagonal().array() -= b;
    return {A, b};
}

double trace_integral(const DeformationFamily& family, double t)
{
    check_time(family, t);
    switch (family.mode)
    {
    case FamilyMode::SimpleShear:
    case FamilyMode::CombinedShear:
        return 0.0;
    case FamilyMode::DecayingDilatation:
        return std::log1p(family.dilatation_rate * t);
    case FamilyMode::ExactFromL0:
        return std::log(resolvent_base(family, t).determinant());
    }
    return 0.0;
}

DensityFlow density_and_flow(const DeformationFamily& family, double t)
{
    check_time(family, t);
    const Mat3 M = resolvent_base(family, t);
    return {std::exp(-trace_integral(family, t)), M.inverse()};
}

Mat3 exact_flow(const DeformationFamily& family, double t0, double t1)
{
    check_time(family, t0);
    check_time(family, t1);
    const Mat3 M1 = resolvent_base(family, t1);
    const Mat3 M0 = resolvent_base(family, t0);
    return M1.partialPivLu().solve(M0);
}

Mat3 midpoint_flow(const DeformationFamily& family, double t0, double t1)
{
    const Mat3 Lmid = evaluate_L(family, 0.5 * (t0 + t1));
    const Mat3 X = -(t1 - t0) * Lmid;
    return X.exp();
}

namespace {

// r_t without the horizon check; the integral to infinity runs past the horizon.
double r_remainder_unchecked(const DeformationFamily& family, double t)
{
    const double l = family.dilatation_rate;
    return (l - 1.0) / ((1.0 + l * t) * (1.0 + t));
}

}  // namespace

double r_remainder(const DeformationFamily& family, double t)
{
    if (family.mode != FamilyMode::DecayingDilatation)
        throw FamilyMismatchError("r_t is defined for the decaying-dilatation family only");
    check_time(family, t);
    if (family.idealized())
        return 0.0;
    // l/(1+l t) - 1/(1+t), written without cancellation.
    return r_remainder_unchecked(family, t);
}

RemainderIntegral r_integral(const DeformationFamily& family, double tail_tol)
{
    if (family.mode != FamilyMode::DecayingDilatation)
        throw FamilyMismatchError("r_t is defined for the decaying-dilatation family only");
    if (family.idealized())
        return {0.0, 0.0, 0.0};
    // Bound C = sup (1+t)^2 |r_t| from a logarithmic grid.
    double C = 0.0;
    for (int k = 0; k <= 400; ++k)
    {
        const double t = std::expm1(k * std::log1p(1e6) / 400.0);
        C = std::max(C, (1.0 + t) * (1.0 + t) * std::abs(r_remainder_unchecked(family, t)));
    }
    const double T = C / tail_tol;
    // Substitution t = e^u - 1 keeps the integrand smooth on a long interval.
    auto integrand = [&](double u) {
        const double t = std::expm1(u);
        return r_remainder_unchecked(family, t) * std::exp(u);
    };
    const double value = integrate_adaptive(integrand, 0.0, std::log1p(T), 1e-12);
    return {value, T, C / (1.0 + T)};
}

double r_integral_closed_form(const DeformationFamily& family)
{
    if (family.mode != FamilyMode::DecayingDilatation)
        throw FamilyMismatchError("r_t is defined for the decaying-dilatation family only");
    return std::log(family.dilatation_rate);
}

}  // namespace homoenergetic
