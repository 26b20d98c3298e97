#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "homoenergetic/geometry.hpp"
#include "homoenergetic/kernel.hpp"

namespace homoenergetic {

//! Standard Maxwellian (2 pi)^(-3/2) exp(-|v|^2/2).
double maxwellian(const Vec3& v);

//! Generalized Laguerre (Sonine) polynomials S_0..S_{n-1} of order alpha at x.
void sonine_values(int n, double alpha, double x, double* out);

//! Trace-free symmetric part of A.
Mat3 dev_sym(const Mat3& A);

/*!
 * Radial Sonine modes times a fixed degree-2 tensor:
 * phi_n(v) = S_n^{(5/2)}(|v|^2/2) (v . D v) mu(v) / sqrt(g_n),
 * with D trace-free symmetric of unit Frobenius norm and g_n the exact norm
 * in L^2(mu^{-1/2}), so the family is orthonormal there.
 */
class SonineTensorBasis
{
  public:
    //! Direction is dev_sym(A) normalized; A = 0 selects the simple-shear direction.
    SonineTensorBasis(int N, const Mat3& A);

    int size() const { return N_; }
    const Mat3& direction() const { return direction_; }
    double norm_squared(int n) const { return g_[n]; }

    //! phi_n(v) for n = 0..N-1.
    void values(const Vec3& v, double* out) const;
    double value(int n, const Vec3& v) const;
    //! Radial factors P_n(|v|^2) = S_n(|v|^2/2)/sqrt(g_n).
    void radial(double v2, double* out) const;

  private:
    int N_;
    Mat3 direction_;
    std::vector<double> g_;
};

//! Gram matrix of the basis in L^2(mu^{-1/2}) by tensor Gauss-Hermite quadrature.
Eigen::MatrixXd basis_gram(const SonineTensorBasis& basis);

//! Kernel moments int phi_n, int v phi_n, int |v|^2 phi_n (rows n; 5 columns).
Eigen::MatrixXd basis_kernel_moments(const SonineTensorBasis& basis);

enum class AssemblyMethod
{
    Quadrature,  //!< deterministic product Gauss rule of the rotation-averaged Dirichlet form
    MonteCarlo   //!< stratified importance-sampled Monte Carlo over (v, v*, sigma)
};

struct AssemblyOptions
{
    AssemblyMethod method = AssemblyMethod::Quadrature;
    std::uint64_t samples = 10'000'000;  //!< Monte Carlo only
    std::uint64_t seed = 20240611;       //!< Monte Carlo only
    int strata = 16;                     //!< Monte Carlo only
    int batches_per_stratum = 16;        //!< Monte Carlo only
    int extra_nodes = 4;                 //!< quadrature: reference rule refinement per axis
    int threads = 1;
};

struct GalerkinSystem
{
    Mat3 A = Mat3::Zero();
    int N = 0;
    Mat3 direction = Mat3::Zero();
    AssemblyMethod method = AssemblyMethod::Quadrature;
    std::uint64_t samples = 0;
    Eigen::MatrixXd M;         //!< Dirichlet matrix <phi_m, L phi_n>
    Eigen::VectorXd rhs;       //!< <phi_n, v.Av mu>
    Eigen::MatrixXd mc_error;  //!< entrywise standard error (MC) or rule-difference bound (quadrature)
    Eigen::VectorXd coeffs;    //!< filled by solve_first_order
    double a_bar = 0.0;
    double a_bar_std_err = 0.0;
    double eigen_min = 0.0;
    std::vector<std::string> warnings;

    //! Error model for a_bar: per-stratum batch matrices (MC) or rule difference (quadrature).
    std::vector<std::vector<Eigen::MatrixXd>> stratum_batches;
    Eigen::MatrixXd rule_difference;
};

//! M and rhs for driving matrix A.
GalerkinSystem assemble_dirichlet(const CollisionKernel& kernel, const SonineTensorBasis& basis, const Mat3& A,
                                  const AssemblyOptions& options = {});

//! CG solve of M c = rhs (relative residual <= 1e-10), a_bar = rhs . c and its propagated error.
void solve_first_order(GalerkinSystem& system);

//! Convenience: assemble and solve for A with N modes.
GalerkinSystem compute_a_bar(const CollisionKernel& kernel, const Mat3& A, int N,
                             const AssemblyOptions& options = {});

/*!
 * a_hat with a(A) = a_hat |dev sym A|_F^2 for every A (isotropy of the operator).
 * Uses the deterministic quadrature; results are memoized per kernel and N.
 */
double a_hat(const CollisionKernel& kernel, int N = 16, int threads = 1);

//! mu_bar(v) = -(1/eta) sum_n c_n phi_n(v).
double evaluate_mu_bar(const Eigen::VectorXd& coeffs, const SonineTensorBasis& basis, double eta, const Vec3& v);

struct MuBarMoments
{
    double mass;      //!< int mu_bar
    Vec3 momentum;    //!< int v mu_bar
    double energy;    //!< int |v|^2 mu_bar
    double driven;    //!< int v.Av mu_bar
    double shear12;   //!< int v1 v2 mu_bar
};

//! Moments of mu_bar by tensor Gauss-Hermite quadrature.
MuBarMoments mu_bar_moments(const Eigen::VectorXd& coeffs, const SonineTensorBasis& basis, double eta,
                            const Mat3& A);

struct OracleOptions
{
    int radial_panels = 14;  //!< panels of width ~1 in |v - v*| beyond the first
    int radial_nodes = 8;
    int polar_nodes = 24;    //!< direction of v - v*
    int azimuth_nodes = 48;
    int theta_nodes = 24;    //!< scattering angle
    int phi_nodes = 32;
    bool error_estimate = true;
    double tolerance = 1e-4;
};

struct OracleResult
{
    std::vector<double> values;  //!< L h_k(v)
    std::vector<double> errors;  //!< difference to a coarser rule
    double scale = 0.0;          //!< magnitude of the loss term, for relative errors
    bool tolerance_met = true;
};

//! Several functions evaluated at once: h(v, out) writes count values.
using BatchFunction = std::function<void(const Vec3&, double*)>;

/*!
 * Brute-force L h(v) = -int int B [mu'_* h' + h'_* mu' - mu_* h - mu h_*] dsigma dv*
 * by direct quadrature at a fixed v (grazing cutoff applied to non-cutoff laws).
 */
OracleResult apply_L_oracle(const CollisionKernel& kernel, const BatchFunction& h, int count, const Vec3& v,
                            const OracleOptions& options = {});

double apply_L_oracle(const CollisionKernel& kernel, const std::function<double(const Vec3&)>& h, const Vec3& v,
                      const OracleOptions& options = {});

//! E[(v.A_s v)^2] for v ~ mu: (tr A_s)^2 + 2 tr(A_s^2).
double gaussian_quartic_moment(const Mat3& A);

}  // namespace homoenergetic
