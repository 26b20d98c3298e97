#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "homoenergetic/quadrature.hpp"
#include "homoenergetic/rng.hpp"

namespace homoenergetic {

enum class AngularType { NonCutoffPowerLaw, ConstantCutoff, HardSphereLike };

/*!
 * Angular part b(cos theta) of the collision kernel, supported on theta in [0, pi/2].
 *
 * NonCutoffPowerLaw: sin(theta) b = K_b theta^(-1-2s) taper(theta), taper(0+) = 1.
 * ConstantCutoff:    b = b0.
 * HardSphereLike:    b = b0 cos(theta/2).
 */
struct AngularLaw
{
    AngularType type = AngularType::ConstantCutoff;
    double s = 0.25;
    double K_b = 1.0;
    double b0 = 0.0;
    std::function<double(double)> taper;  //!< empty means taper == 1
};

//! b0 for which the integral of b over the unit sphere (support theta <= pi/2) equals one.
double unit_mass_b0();

class ScatteringSampler;

/*!
 * Collision kernel B(|u|, cos theta) = |u|^gamma b(cos theta).
 *
 * Immutable after construction and safe to share between threads. The
 * inverse-CDF table used for sampling is built lazily on first use.
 */
class CollisionKernel
{
  public:
    static CollisionKernel non_cutoff(double gamma, double s, double K_b = 1.0, double grazing_eps = 0.02,
                                      std::function<double(double)> taper = {});
    static CollisionKernel constant_cutoff(double gamma, double b0 = unit_mass_b0());
    static CollisionKernel hard_sphere_like(double gamma, double b0);

    double gamma() const { return gamma_; }
    const AngularLaw& angular() const { return law_; }
    double grazing_eps() const { return eps_; }
    bool is_cutoff() const { return law_.type != AngularType::NonCutoffPowerLaw; }
    //! gamma = 0 cutoff kernel, used only as a validation oracle.
    bool is_maxwell_surrogate() const { return gamma_ == 0.0; }

    //! Same law with another grazing cutoff (non-cutoff laws only).
    CollisionKernel with_grazing_eps(double eps) const;

    //! Lower end of the sampled angular range: eps for non-cutoff laws, 0 otherwise.
    double theta_min() const { return is_cutoff() ? 0.0 : eps_; }

    //! sin(theta) b(cos theta) on (0, pi/2], evaluated without cancellation.
    double sin_b(double theta) const;

    //! Shared sampler table (built on first call).
    const ScatteringSampler& sampler() const;

    std::string describe() const;

  private:
    CollisionKernel(double gamma, AngularLaw law, double eps);

    double gamma_;
    AngularLaw law_;
    double eps_;
    struct SamplerCache;
    std::shared_ptr<SamplerCache> cache_;
};

//! b(cos theta) for theta in (0, pi/2]; DomainError otherwise.
double angular_density(const CollisionKernel& kernel, double theta);

enum class AngularWeight
{
    ThetaWeighted,  //!< Lambda_eps = int_eps^{pi/2} sin(theta) b theta dtheta
    SinSquared,     //!< int_0^{pi/2} sin(theta) b sin^2(theta) dtheta
    Mass            //!< Mass_eps = int_eps^{pi/2} sin(theta) b dtheta
};

//! Angular integrals by adaptive Gauss-Kronrod with singularity subtraction.
double angular_moment(const CollisionKernel& kernel, AngularWeight weight, double rel_tol = 1e-10);

//! Lambda at an explicit lower limit eps (for monotonicity sweeps).
double theta_weighted_moment(const CollisionKernel& kernel, double eps, double rel_tol = 1e-10);

//! Degree-2 eigenvalue of the Maxwell-surrogate linearized operator, (3 pi / 2) * SinSquared moment.
double maxwell_lambda2(const CollisionKernel& kernel);

/*!
 * Rule in c = cos(theta) such that
 * sum_i w_i g(c_i) ~ int_eps^{pi/2} sin(theta) b(cos theta) g(cos theta) dtheta.
 *
 * Non-cutoff laws with eps = 0 use Gauss-Jacobi with weight (1-c)^(-s); the
 * rule is then accurate for g vanishing linearly at c = 1 (difference brackets).
 */
GaussRule angular_rule(const CollisionKernel& kernel, int n);

//! Inverse-CDF sampler of theta with density proportional to sin(theta) b on [theta_min, pi/2].
class ScatteringSampler
{
  public:
    explicit ScatteringSampler(const CollisionKernel& kernel, int table_nodes = 16384);
    ~ScatteringSampler();
    ScatteringSampler(const ScatteringSampler&) = delete;
    ScatteringSampler& operator=(const ScatteringSampler&) = delete;

    double sample_theta(Engine& rng) const;
    //! Normalized CDF at theta, from the tabulated exact cumulative integrals.
    double cdf(double theta) const;
    double theta_min() const { return theta_min_; }
    double mass() const { return mass_; }
    std::size_t table_size() const;

  private:
    double theta_min_;
    double mass_;
    struct Table;
    std::unique_ptr<Table> table_;
};

//! (theta, phi): theta from the kernel's angular law, phi uniform in [0, 2 pi).
std::pair<double, double> sample_scattering(const CollisionKernel& kernel, Engine& rng);

}  // namespace homoenergetic
