#include "homoenergetic/kernel.hpp"

#include <cmath>
#include <mutex>
#include <sstream>
#include <vector>

// Boost 1.74 pchip calls an unqualified isnan.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "homoenergetic/errors.hpp"

namespace homoenergetic {

namespace {

constexpr double half_pi = M_PI / 2.0;

double taper_at(const AngularLaw& law, double theta)
{
    return law.taper ? law.taper(theta) : 1.0;
}

}  // namespace

double unit_mass_b0()
{
    // 2 pi b0 int_0^{pi/2} sin = 1
    return 1.0 / (2.0 * M_PI);
}

struct CollisionKernel::SamplerCache
{
    std::once_flag once;
    std::unique_ptr<ScatteringSampler> sampler;
};

CollisionKernel::CollisionKernel(double gamma, AngularLaw law, double eps)
    : gamma_(gamma), law_(std::move(law)), eps_(eps), cache_(std::make_shared<SamplerCache>())
{
    if (!std::isfinite(gamma_))
        throw ConfigError("kernel gamma must be finite");
    if (law_.type == AngularType::NonCutoffPowerLaw)
    {
        if (!(gamma_ > 0.0 && gamma_ < 1.0))
            throw ConfigError("non-cutoff kernels need gamma in (0, 1)");
        if (!(law_.s > 0.0 && law_.s < 0.5))
            throw PreconditionError("non-cutoff exponent s must lie in (0, 1/2)");
        if (!(law_.K_b > 0.0))
            throw ConfigError("K_b must be positive");
        if (!(eps_ >= 0.0 && eps_ < half_pi))
            throw ConfigError("grazing_eps must lie in [0, pi/2)");
    }
    else
    {
        if (!(gamma_ >= 0.0 && gamma_ <= 1.0))
            throw ConfigError("cutoff kernels need gamma in [0, 1] (0 = Maxwell surrogate)");
        if (!(law_.b0 > 0.0))
            throw ConfigError("b0 must be positive");
        eps_ = 0.0;
    }
}

CollisionKernel CollisionKernel::non_cutoff(double gamma, double s, double K_b, double grazing_eps,
                                            std::function<double(double)> taper)
{
    AngularLaw law;
    law.type = AngularType::NonCutoffPowerLaw;
    law.s = s;
    law.K_b = K_b;
    law.taper = std::move(taper);
    return CollisionKernel(gamma, std::move(law), grazing_eps);
}

CollisionKernel CollisionKernel::constant_cutoff(double gamma, double b0)
{
    AngularLaw law;
    law.type = AngularType::ConstantCutoff;
    law.b0 = b0;
    return CollisionKernel(gamma, std::move(law), 0.0);
}

CollisionKernel CollisionKernel::hard_sphere_like(double gamma, double b0)
{
    AngularLaw law;
    law.type = AngularType::HardSphereLike;
    law.b0 = b0;
    return CollisionKernel(gamma, std::move(law), 0.0);
}

CollisionKernel CollisionKernel::with_grazing_eps(double eps) const
{
    if (is_cutoff())
        return *this;
    return CollisionKernel(gamma_, law_, eps);
}

double CollisionKernel::sin_b(double theta) const
{
    switch (law_.type)
    {
    case AngularType::NonCutoffPowerLaw:
        return law_.K_b * std::pow(theta, -1.0 - 2.0 * law_.s) * taper_at(law_, theta);
    case AngularType::ConstantCutoff:
        return std::sin(theta) * law_.b0;
    case AngularType::HardSphereLike:
        return std::sin(theta) * law_.b0 * std::cos(0.5 * theta);
    }
    return 0.0;
}

const ScatteringSampler& CollisionKernel::sampler() const
{
    std::call_once(cache_->once, [this] { cache_->sampler = std::make_unique<ScatteringSampler>(*this); });
    return *cache_->sampler;
}

std::string CollisionKernel::describe() const
{
    std::ostringstream os;
    os.precision(17);
    os << "gamma=" << gamma_ << " ";
    switch (law_.type)
    {
    case AngularType::NonCutoffPowerLaw:
        os << "noncutoff(s=" << law_.s << ",Kb=" << law_.K_b << (law_.taper ? ",tapered" : "")
           << ") eps=" << eps_;
        break;
    case AngularType::ConstantCutoff:
        os << "cutoff(b0=" << law_.b0 << ")";
        break;
    case AngularType::HardSphereLike:
        os << "hard_sphere_like(b0=" << law_.b0 << ")";
        break;
    }
    return os.str();
}

double angular_density(const CollisionKernel& kernel, double theta)
{
    if (!(theta > 0.0 && theta <= half_pi))
        throw DomainError("theta must lie in (0, pi/2]");
    const AngularLaw& law = kernel.angular();
    switch (law.type)
    {
    case AngularType::NonCutoffPowerLaw:
        return law.K_b * std::pow(theta, -1.0 - 2.0 * law.s) / std::sin(theta) * taper_at(law, theta);
    case AngularType::ConstantCutoff:
        return law.b0;
    case AngularType::HardSphereLike:
        return law.b0 * std::cos(0.5 * theta);
    }
    return 0.0;
}

namespace {

// int_eps^{pi/2} sin(theta) b(theta) w(theta) dtheta for the power law, with the
// pure power K_b theta^(-1-2s) w_lead(theta) integrated in closed form and only
// the taper/weight correction left to Gauss-Kronrod.
double power_law_moment(const CollisionKernel& kernel, AngularWeight weight, double eps, double tol)
{
    const AngularLaw& law = kernel.angular();
    const double s = law.s;
    double closed = 0.0;
    std::function<double(double)> remainder;
    switch (weight)
    {
    case AngularWeight::ThetaWeighted:
        closed = (std::pow(half_pi, 1.0 - 2.0 * s) - std::pow(eps, 1.0 - 2.0 * s)) / (1.0 - 2.0 * s);
        remainder = [&](double th) { return std::pow(th, -2.0 * s) * (taper_at(law, th) - 1.0); };
        break;
    case AngularWeight::Mass:
        if (eps <= 0.0)
            throw DivergenceError("Mass_0 of a non-cutoff law (grazing_eps = 0)");
        closed = (std::pow(eps, -2.0 * s) - std::pow(half_pi, -2.0 * s)) / (2.0 * s);
        remainder = [&](double th) { return std::pow(th, -1.0 - 2.0 * s) * (taper_at(law, th) - 1.0); };
        break;
    case AngularWeight::SinSquared:
        closed = (std::pow(half_pi, 2.0 - 2.0 * s) - std::pow(eps, 2.0 - 2.0 * s)) / (2.0 - 2.0 * s);
        remainder = [&](double th) {
            const double sn = std::sin(th);
            return std::pow(th, -1.0 - 2.0 * s) * (sn * sn * taper_at(law, th) - th * th);
        };
        break;
    }
    double corr = 0.0;
    if (law.taper || weight == AngularWeight::SinSquared)
        corr = integrate_adaptive(remainder, eps, half_pi, tol);
    return law.K_b * (closed + corr);
}

double weight_at(AngularWeight weight, double theta)
{
    switch (weight)
    {
    case AngularWeight::ThetaWeighted:
        return theta;
    case AngularWeight::SinSquared:
        return std::sin(theta) * std::sin(theta);
    case AngularWeight::Mass:
        return 1.0;
    }
    return 0.0;
}

}  // namespace

double theta_weighted_moment(const CollisionKernel& kernel, double eps, double rel_tol)
{
    if (kernel.is_cutoff())
        return integrate_adaptive([&](double th) { return kernel.sin_b(th) * th; }, eps, half_pi, rel_tol);
    return power_law_moment(kernel, AngularWeight::ThetaWeighted, eps, rel_tol);
}

double angular_moment(const CollisionKernel& kernel, AngularWeight weight, double rel_tol)
{
    if (kernel.is_cutoff())
    {
        if (kernel.angular().type == AngularType::ConstantCutoff)
        {
            // Closed forms for the constant law.
            const double b0 = kernel.angular().b0;
            switch (weight)
            {
            case AngularWeight::ThetaWeighted:
                return b0;
            case AngularWeight::Mass:
                return b0;
            case AngularWeight::SinSquared:
                return b0 * 2.0 / 3.0;
            }
        }
        return integrate_adaptive([&](double th) { return kernel.sin_b(th) * weight_at(weight, th); }, 0.0,
                                  half_pi, rel_tol);
    }
    // The SinSquared moment is finite at eps = 0 and is defined without cutoff.
    const double eps = weight == AngularWeight::SinSquared ? 0.0 : kernel.grazing_eps();
    return power_law_moment(kernel, weight, eps, rel_tol);
}

double maxwell_lambda2(const CollisionKernel& kernel)
{
    return 1.5 * M_PI * angular_moment(kernel, AngularWeight::SinSquared);
}

GaussRule angular_rule(const CollisionKernel& kernel, int n)
{
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    if (kernel.is_cutoff())
    {
        const GaussRule gl = gauss_legendre(n, 0.0, 1.0);
        for (int i = 0; i < n; ++i)
        {
            const double c = gl.nodes[i];
            rule.nodes[i] = c;
            rule.weights[i] = gl.weights[i] * angular_density(kernel, std::acos(c));
        }
        return rule;
    }
    const double s = kernel.angular().s;
    const double eps = kernel.grazing_eps();
    if (eps == 0.0)
    {
        // c = (x+1)/2, weight (1-c)^(-s) absorbed into Gauss-Jacobi(-s, 0).
        const GaussRule gj = gauss_jacobi(n, -s, 0.0);
        for (int i = 0; i < n; ++i)
        {
            const double c = 0.5 * (gj.nodes[i] + 1.0);
            const double th = std::acos(c);
            const double b = angular_density(kernel, th);
            rule.nodes[i] = c;
            rule.weights[i] = std::pow(2.0, s - 1.0) * gj.weights[i] * b * std::pow(1.0 - c, s);
        }
        return rule;
    }
    // Grazing cutoff: Gauss-Legendre in log(theta) over [eps, pi/2].
    const GaussRule gl = gauss_legendre(n, std::log(eps), std::log(half_pi));
    for (int i = 0; i < n; ++i)
    {
        const double th = std::exp(gl.nodes[i]);
        rule.nodes[i] = std::cos(th);
        rule.weights[i] = gl.weights[i] * th * kernel.sin_b(th);
    }
    return rule;
}

struct ScatteringSampler::Table
{
    std::vector<double> theta;
    std::vector<double> cdf;
    boost::math::interpolators::pchip<std::vector<double>> inverse;
    boost::math::interpolators::pchip<std::vector<double>> forward;

    Table(std::vector<double> th, std::vector<double> F)
        : theta(th), cdf(F), inverse(std::vector<double>(F), std::vector<double>(th)),
          forward(std::move(th), std::move(F))
    {
    }
};

ScatteringSampler::ScatteringSampler(const CollisionKernel& kernel, int table_nodes)
    : theta_min_(kernel.theta_min()), mass_(0.0)
{
    if (!kernel.is_cutoff() && kernel.grazing_eps() <= 0.0)
        throw PreconditionError("sampling a non-cutoff law needs grazing_eps > 0");
    if (table_nodes < 4096)
        throw PreconditionError("sampler table needs at least 4096 nodes");

    // Nodes uniform in a variable in which the CDF is close to linear.
    std::vector<double> theta(table_nodes + 1);
    if (kernel.is_cutoff())
    {
        for (int k = 0; k <= table_nodes; ++k)
            theta[k] = std::acos(1.0 - double(k) / table_nodes);
    }
    else
    {
        const double two_s = 2.0 * kernel.angular().s;
        const double u0 = std::pow(theta_min_, -two_s), u1 = std::pow(half_pi, -two_s);
        for (int k = 0; k <= table_nodes; ++k)
            theta[k] = std::pow(u0 + (u1 - u0) * double(k) / table_nodes, -1.0 / two_s);
    }
    theta.front() = theta_min_;
    theta.back() = half_pi;

    std::vector<double> cum(table_nodes + 1, 0.0);
    // Cells are narrow and the density is smooth inside each one, so a fixed
    // 8-point Gauss rule per cell is exact to rounding.
    const GaussRule cell = gauss_legendre(8, 0.0, 1.0);
    for (int k = 1; k <= table_nodes; ++k)
    {
        const double a = theta[k - 1], h = theta[k] - a;
        double acc = 0.0;
        for (std::size_t i = 0; i < cell.size(); ++i)
            acc += cell.weights[i] * kernel.sin_b(a + h * cell.nodes[i]);
        cum[k] = cum[k - 1] + h * acc;
    }
    mass_ = cum.back();
    for (double& c : cum)
        c /= mass_;
    cum.back() = 1.0;
    table_ = std::make_unique<Table>(std::move(theta), std::move(cum));
}

ScatteringSampler::~ScatteringSampler() = default;

std::size_t ScatteringSampler::table_size() const
{
    return table_->theta.size();
}

double ScatteringSampler::sample_theta(Engine& rng) const
{
    const double u = uniform01(rng);
    const double th = table_->inverse(u);
    return std::min(std::max(th, theta_min_), half_pi);
}

double ScatteringSampler::cdf(double theta) const
{
    if (theta <= theta_min_)
        return 0.0;
    if (theta >= half_pi)
        return 1.0;
    return table_->forward(theta);
}

std::pair<double, double> sample_scattering(const CollisionKernel& kernel, Engine& rng)
{
    const double theta = kernel.sampler().sample_theta(rng);
    const double phi = 2.0 * M_PI * uniform01(rng);
    return {theta, phi};
}

}  // namespace homoenergetic
