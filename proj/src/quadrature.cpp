#include "homoenergetic/quadrature.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "homoenergetic/errors.hpp"

namespace homoenergetic {

GaussRule golub_welsch(const std::vector<double>& alpha, const std::vector<double>& beta, double mu0)
{
    const int n = static_cast<int>(alpha.size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
    {
        J(i, i) = alpha[i];
        if (i > 0)
        {
            const double off = std::sqrt(beta[i]);
            J(i, i - 1) = off;
            J(i - 1, i) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success)
        throw NumericalError("Golub-Welsch eigenproblem failed");
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i)
    {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

GaussRule gauss_legendre(int n, double a, double b)
{
    std::vector<double> alpha(n, 0.0), beta(n, 0.0);
    for (int k = 1; k < n; ++k)
        beta[k] = double(k) * k / (4.0 * k * k - 1.0);
    GaussRule rule = golub_welsch(alpha, beta, 2.0);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int i = 0; i < n; ++i)
    {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

GaussRule gauss_hermite(int n)
{
    std::vector<double> alpha(n, 0.0), beta(n, 0.0);
    for (int k = 1; k < n; ++k)
        beta[k] = k;
    return golub_welsch(alpha, beta, std::sqrt(2.0 * M_PI));
}

GaussRule gauss_laguerre(int n, double a)
{
    std::vector<double> alpha(n), beta(n, 0.0);
    for (int k = 0; k < n; ++k)
    {
        alpha[k] = 2.0 * k + a + 1.0;
        if (k > 0)
            beta[k] = k * (k + a);
    }
    return golub_welsch(alpha, beta, std::tgamma(a + 1.0));
}

GaussRule gauss_jacobi(int n, double a, double b)
{
    std::vector<double> alpha(n), beta(n, 0.0);
    const double ab = a + b;
    alpha[0] = (b - a) / (ab + 2.0);
    for (int k = 1; k < n; ++k)
    {
        const double s = 2.0 * k + ab;
        alpha[k] = (b * b - a * a) / (s * (s + 2.0));
        if (k == 1)
            beta[k] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        else
            beta[k] = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0)
                                - std::lgamma(ab + 2.0));
    return golub_welsch(alpha, beta, mu0);
}

void stieltjes(const std::vector<double>& x, const std::vector<double>& w, int n,
               std::vector<double>& alpha, std::vector<double>& beta)
{
    const std::size_t m = x.size();
    alpha.assign(n, 0.0);
    beta.assign(n, 0.0);
    // Orthonormal-scaled polynomial values on the base nodes.
    std::vector<double> p_prev(m, 0.0), p(m, 1.0), p_next(m);
    double norm_prev = 1.0;
    for (int k = 0; k < n; ++k)
    {
        double norm = 0.0, xnorm = 0.0;
        for (std::size_t i = 0; i < m; ++i)
        {
            const double wp2 = w[i] * p[i] * p[i];
            norm += wp2;
            xnorm += wp2 * x[i];
        }
        alpha[k] = xnorm / norm;
        if (k > 0)
            beta[k] = norm / norm_prev;
        // Rescale the running pair so norms stay O(1); ratios are unaffected.
        const double scale = 1.0 / std::sqrt(norm);
        for (std::size_t i = 0; i < m; ++i)
        {
            p_next[i] = ((x[i] - alpha[k]) * p[i] - (k > 0 ? beta[k] : 0.0) * p_prev[i]) * scale;
            p_prev[i] = p[i] * scale;
        }
        std::swap(p, p_next);
        norm_prev = 1.0;  // p_prev now has unit norm
    }
}

GaussRule gauss_power_gaussian(int n, double p, double c)
{
    // Base measure: composite rule on [0, R] in r; weight r^p exp(-c r^2).
    const double R = std::sqrt(700.0 / c);
    const int panels = 400;
    const double h = R / panels;
    const int per_panel = 24;
    std::vector<double> x, w;
    x.reserve(panels * per_panel);
    w.reserve(panels * per_panel);

    // First panel: Gauss-Jacobi with weight (1+y)^p on y in [-1, 1].
    const GaussRule first = gauss_jacobi(per_panel, 0.0, p);
    for (std::size_t i = 0; i < first.size(); ++i)
    {
        const double r = 0.5 * h * (1.0 + first.nodes[i]);
        x.push_back(r);
        w.push_back(first.weights[i] * std::pow(0.5 * h, p + 1.0) * std::exp(-c * r * r));
    }
    const GaussRule gl = gauss_legendre(per_panel, 0.0, h);
    for (int k = 1; k < panels; ++k)
    {
        for (std::size_t i = 0; i < gl.size(); ++i)
        {
            const double r = k * h + gl.nodes[i];
            const double wr = gl.weights[i] * std::pow(r, p) * std::exp(-c * r * r);
            if (wr <= 0.0)
                continue;
            x.push_back(r);
            w.push_back(wr);
        }
    }
    double mu0 = 0.0;
    for (double wi : w)
        mu0 += wi;
    std::vector<double> alpha, beta;
    stieltjes(x, w, n, alpha, beta);
    return golub_welsch(alpha, beta, mu0);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                          double* error)
{
    // Below ~1e-11 the Kronrod error estimate sits at its rounding floor and
    // bisection only accumulates more of it.
    rel_tol = std::max(rel_tol, 1e-11);
    double err = 0.0, l1 = 0.0;
    const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, rel_tol,
                                                                                   &err, &l1);
    if (!std::isfinite(val))
        throw NumericalError("adaptive quadrature produced a non-finite value");
    if (err > 100.0 * rel_tol * std::max(l1, std::numeric_limits<double>::min()))
        throw NumericalError("adaptive quadrature did not reach tolerance");
    if (error)
        *error = err;
    return val;
}

}  // namespace homoenergetic
