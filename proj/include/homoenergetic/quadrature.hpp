#pragma once

#include <functional>
#include <vector>

namespace homoenergetic {

//! One-dimensional quadrature rule: sum_i weights[i] * f(nodes[i]).
struct GaussRule
{
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    template<class F>
    double integrate(F&& f) const
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            acc += weights[i] * f(nodes[i]);
        return acc;
    }
};

/*!
 * Gauss rule from three-term recurrence coefficients (Golub-Welsch).
 *
 * \param alpha diagonal recurrence coefficients alpha_0..alpha_{n-1}
 * \param beta  off-diagonal coefficients beta_1..beta_{n-1} (beta[0] unused)
 * \param mu0   total mass of the weight
 */
GaussRule golub_welsch(const std::vector<double>& alpha, const std::vector<double>& beta, double mu0);

//! Gauss-Legendre on [a, b].
GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

//! Gauss-Hermite for the weight exp(-x^2/2) on the real line.
GaussRule gauss_hermite(int n);

//! Generalized Gauss-Laguerre for the weight x^a exp(-x) on [0, inf).
GaussRule gauss_laguerre(int n, double a = 0.0);

//! Gauss-Jacobi for the weight (1-x)^a (1+x)^b on [-1, 1].
GaussRule gauss_jacobi(int n, double a, double b);

/*!
 * Gauss rule for the weight r^p exp(-c r^2) on [0, inf).
 *
 * Recurrence coefficients come from a discretized Stieltjes procedure on a
 * fine composite base rule; the first panel is Gauss-Jacobi so the r^p
 * factor is integrated exactly near the origin.
 */
GaussRule gauss_power_gaussian(int n, double p, double c);

//! Discretized Stieltjes procedure: recurrence coefficients of a discrete measure.
void stieltjes(const std::vector<double>& x, const std::vector<double>& w, int n,
               std::vector<double>& alpha, std::vector<double>& beta);

//! Adaptive Gauss-Kronrod on [a, b] (b may be +inf); throws on non-convergence.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-10, double* error = nullptr);

}  // namespace homoenergetic
