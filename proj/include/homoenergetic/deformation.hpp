#pragma once

#include <string>

#include "homoenergetic/geometry.hpp"

namespace homoenergetic {

enum class FamilyMode { ExactFromL0, SimpleShear, DecayingDilatation, CombinedShear };

/*!
 * Time-dependent deformation matrix t -> L_t with L' + L^2 = 0.
 *
 * Every canonical family is realised by a concrete generator L0 with
 * L_t = L0 (I + t L0)^-1, so flows and densities have closed forms:
 *
 * - simple shear: L0 = K e12 (constant in time);
 * - combined orthogonal shear: L0 = [[0,K3,K2],[0,0,K1],[0,0,0]], giving
 *   entry (1,3) = K2 - t K1 K3;
 * - shear with decaying planar dilatation: L0 = [[0,K2+l K1K3,l K1],[0,0,0],[0,l K3,l]]
 *   with dilatation rate l, giving
 *   L_t = K2 e12 + l/(1+l t) (K1K3 e12 + K1 e13 + K3 e32 + e33).
 *   l = 1 is the idealized sub-mode (zero remainder); any other l is an exact
 *   sub-mode with r_t = (l-1)/((1+l t)(1+t)) and int r = ln l.
 */
struct DeformationFamily
{
    FamilyMode mode = FamilyMode::ExactFromL0;
    Mat3 L0 = Mat3::Zero();
    double K = 0.0;
    double K1 = 0.0, K2 = 0.0, K3 = 0.0;
    double dilatation_rate = 1.0;
    double horizon = 1000.0;

    static DeformationFamily exact(const Mat3& L0, double horizon = 1000.0);
    static DeformationFamily zero(double horizon = 1000.0);
    static DeformationFamily simple_shear(double K, double horizon = 1000.0);
    static DeformationFamily combined_shear(double K1, double K2, double K3, double horizon = 1000.0);
    //! dilatation_rate = 1 selects the idealized sub-mode.
    static DeformationFamily decaying_dilatation(double K1, double K2, double K3, double dilatation_rate = 1.0,
                                                 double horizon = 1000.0);

    bool idealized() const { return mode != FamilyMode::DecayingDilatation || dilatation_rate == 1.0; }

    //! The concrete L0 realising this family.
    Mat3 generator() const;

    //! Throws ConfigError unless det(I + t L0) > 0 on [0, horizon] and parameters are admissible.
    void validate() const;

    std::string name() const;
};

struct TraceSplit
{
    Mat3 A;    //!< trace-free part
    double b;  //!< tr L / 3
};

Mat3 evaluate_L(const DeformationFamily& family, double t);

TraceSplit trace_split(const Mat3& L);

struct DensityFlow
{
    double rho;  //!< exp(-int_0^t tr L)
    Mat3 P;      //!< flow of -L_t from time 0
};

DensityFlow density_and_flow(const DeformationFamily& family, double t);

//! int_0^t tr L_s ds = ln det(I + t L0).
double trace_integral(const DeformationFamily& family, double t);

//! Exact velocity flow from t0 to t1: (I + t1 L0)^-1 (I + t0 L0).
Mat3 exact_flow(const DeformationFamily& family, double t0, double t1);

//! Midpoint-frozen exponential exp(-L_{(t0+t1)/2} (t1 - t0)).
Mat3 midpoint_flow(const DeformationFamily& family, double t0, double t1);

//! r_t = tr L_t - 1/(1+t) for the decaying-dilatation family.
double r_remainder(const DeformationFamily& family, double t);

struct RemainderIntegral
{
    double value;       //!< int_0^T r_s ds
    double truncation;  //!< T
    double tail_bound;  //!< C / (1+T) with C = sup (1+t)^2 |r_t| on a grid
};

//! int_0^inf r_s ds by adaptive quadrature, truncated where the tail bound is below tol.
RemainderIntegral r_integral(const DeformationFamily& family, double tail_tol = 1e-6);

//! Closed form ln(dilatation_rate) of the same integral.
double r_integral_closed_form(const DeformationFamily& family);

}  // namespace homoenergetic
