#include "homoenergetic/linearized.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "homoenergetic/errors.hpp"
#include "homoenergetic/quadrature.hpp"
#include "homoenergetic/rng.hpp"

namespace homoenergetic {

namespace {

constexpr double sonine_alpha = 2.5;

// int |v|^4 S_n(|v|^2/2)^2 mu dv = c * Gamma(n + 7/2) / n!
double radial_norm(int n)
{
    const double c = 4.0 * M_PI * std::pow(2.0 * M_PI, -1.5) * 8.0 / std::sqrt(2.0);
    return (2.0 / 15.0) * c * std::exp(std::lgamma(n + 3.5) - std::lgamma(n + 1.0));
}

// Coordinates of x x^T in an orthonormal basis of trace-free symmetric matrices:
// sum_k t_k(x) t_k(y) = (x.y)^2 - |x|^2 |y|^2 / 3.
inline void tensor_coords(const Vec3& x, double* t)
{
    static const double r2 = std::sqrt(2.0), r6 = std::sqrt(6.0);
    const double xx = x.x() * x.x(), yy = x.y() * x.y(), zz = x.z() * x.z();
    t[0] = (xx - yy) / r2;
    t[1] = (xx + yy - 2.0 * zz) / r6;
    t[2] = r2 * x.x() * x.y();
    t[3] = r2 * x.x() * x.z();
    t[4] = r2 * x.y() * x.z();
}

// Run body(i) for i in [0, n) on up to `threads` workers; results are combined
// by the caller in index order, so the outcome does not depend on scheduling.
template<class Body>
void parallel_for(int n, int threads, Body body)
{
    threads = std::max(1, std::min(threads, n));
    if (threads == 1)
    {
        for (int i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < threads; ++w)
    {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++)
            {
                try
                {
                    body(i);
                }
                catch (...)
                {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

}  // namespace

double maxwellian(const Vec3& v)
{
    static const double norm = std::pow(2.0 * M_PI, -1.5);
    return norm * std::exp(-0.5 * v.squaredNorm());
}

void sonine_values(int n, double alpha, double x, double* out)
{
    if (n <= 0)
        return;
    out[0] = 1.0;
    if (n == 1)
        return;
    out[1] = 1.0 + alpha - x;
    for (int k = 1; k + 1 < n; ++k)
        out[k + 1] = ((2.0 * k + 1.0 + alpha - x) * out[k] - (k + alpha) * out[k - 1]) / (k + 1.0);
}

Mat3 dev_sym(const Mat3& A)
{
    Mat3 S = 0.5 * (A + A.transpose());
    S.diagonal().array() -= S.trace() / 3.0;
    return S;
}

double gaussian_quartic_moment(const Mat3& A)
{
    const Mat3 S = 0.5 * (A + A.transpose());
    return S.trace() * S.trace() + 2.0 * (S * S).trace();
}

SonineTensorBasis::SonineTensorBasis(int N, const Mat3& A) : N_(N), g_(N)
{
    if (N < 1)
        throw ConfigError("basis needs at least one radial mode");
    Mat3 D = dev_sym(A);
    const double norm = D.norm();
    if (norm > 0.0)
        direction_ = D / norm;
    else
    {
        direction_ = Mat3::Zero();
        direction_(0, 1) = direction_(1, 0) = 1.0 / std::sqrt(2.0);
    }
    for (int n = 0; n < N; ++n)
        g_[n] = radial_norm(n);
}

void SonineTensorBasis::radial(double v2, double* out) const
{
    sonine_values(N_, sonine_alpha, 0.5 * v2, out);
    for (int n = 0; n < N_; ++n)
        out[n] /= std::sqrt(g_[n]);
}

void SonineTensorBasis::values(const Vec3& v, double* out) const
{
    radial(v.squaredNorm(), out);
    const double ang = v.dot(direction_ * v) * maxwellian(v);
    for (int n = 0; n < N_; ++n)
        out[n] *= ang;
}

double SonineTensorBasis::value(int n, const Vec3& v) const
{
    std::vector<double> buf(N_);
    values(v, buf.data());
    return buf[n];
}

namespace {

// Tensor Gauss-Hermite rule for int F(v) mu(v) dv.
template<class F>
void gaussian_tensor_quadrature(int n, F&& f)
{
    const GaussRule gh = gauss_hermite(n);
    const double norm = std::pow(2.0 * M_PI, -1.5);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
            {
                const Vec3 v(gh.nodes[i], gh.nodes[j], gh.nodes[k]);
                f(v, norm * gh.weights[i] * gh.weights[j] * gh.weights[k]);
            }
}

}  // namespace

Eigen::MatrixXd basis_gram(const SonineTensorBasis& basis)
{
    const int N = basis.size();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
    Eigen::VectorXd h(N);
    // Polynomial degree 4N per coordinate: 2N+1 nodes are exact.
    gaussian_tensor_quadrature(2 * N + 2, [&](const Vec3& v, double w) {
        basis.radial(v.squaredNorm(), h.data());
        h *= v.dot(basis.direction() * v);
        G.noalias() += w * h * h.transpose();
    });
    return G;
}

Eigen::MatrixXd basis_kernel_moments(const SonineTensorBasis& basis)
{
    const int N = basis.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N, 5);
    Eigen::VectorXd h(N);
    gaussian_tensor_quadrature(N + 4, [&](const Vec3& v, double w) {
        basis.radial(v.squaredNorm(), h.data());
        h *= v.dot(basis.direction() * v) * w;
        out.col(0) += h;
        out.col(1) += v.x() * h;
        out.col(2) += v.y() * h;
        out.col(3) += v.z() * h;
        out.col(4) += v.squaredNorm() * h;
    });
    return out;
}

namespace {

Eigen::VectorXd assemble_rhs(const SonineTensorBasis& basis, const Mat3& A)
{
    const int N = basis.size();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
    Eigen::VectorXd h(N);
    gaussian_tensor_quadrature(N + 4, [&](const Vec3& v, double w) {
        basis.radial(v.squaredNorm(), h.data());
        rhs += (w * v.dot(basis.direction() * v) * v.dot(A * v)) * h;
    });
    return rhs;
}

struct ProductRule
{
    GaussRule rho2;   // Laguerre in x = rho^2
    GaussRule z;      // weight exp(-z^2)
    GaussRule speed;  // weight r^(2+gamma) exp(-r^2/4)
    GaussRule cosine; // angular rule in cos(theta)
    int n_phi;        // full-circle trapezoid points (even)
};

ProductRule make_product_rule(const CollisionKernel& kernel, int N, int extra)
{
    ProductRule r;
    const int n_main = 2 * N + 1 + extra;
    r.rho2 = gauss_laguerre(N + 1 + extra / 2, 0.0);
    r.z = gauss_hermite(n_main);
    for (std::size_t i = 0; i < r.z.size(); ++i)
    {
        r.z.nodes[i] /= std::sqrt(2.0);
        r.z.weights[i] /= std::sqrt(2.0);
    }
    r.speed = gauss_power_gaussian(n_main, 2.0 + kernel.gamma(), 0.25);
    const bool polynomial_angle = kernel.angular().type == AngularType::ConstantCutoff;
    r.cosine = angular_rule(kernel, polynomial_angle ? n_main : n_main + N + 8);
    r.n_phi = 4 * N + 2 + 2 * extra;
    return r;
}

// Rotation-averaged Dirichlet matrix for a unit-norm direction (independent of it).
Eigen::MatrixXd dirichlet_quadrature(const CollisionKernel& kernel, int N, int extra, int threads)
{
    const SonineTensorBasis basis(N, Mat3::Zero());
    const ProductRule rule = make_product_rule(kernel, N, extra);
    const int n_half = rule.n_phi / 2;
    const double phi_weight = 2.0 * (2.0 * M_PI / rule.n_phi);
    std::vector<double> cos_phi(n_half), sin_phi(n_half);
    for (int k = 0; k < n_half; ++k)
    {
        const double phi = (k + 0.5) * 2.0 * M_PI / rule.n_phi;
        cos_phi[k] = std::cos(phi);
        sin_phi[k] = std::sin(phi);
    }
    const int n_ang = static_cast<int>(rule.cosine.size()) * n_half;
    const int n_rho = static_cast<int>(rule.rho2.size());

    std::vector<Eigen::MatrixXd> partial(n_rho);
    parallel_for(n_rho, threads, [&](int ir) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(N, N);
        Eigen::MatrixXd Qbuf(N, 5 * n_ang);
        std::vector<double> pv(N), ps(N), pp(N), pps(N);
        double tv[5], ts[5], tp[5], tps[5];
        const double rho = std::sqrt(rule.rho2.nodes[ir]);
        for (std::size_t iz = 0; iz < rule.z.size(); ++iz)
        {
            const Vec3 V(rho, 0.0, rule.z.nodes[iz]);
            for (std::size_t iu = 0; iu < rule.speed.size(); ++iu)
            {
                const double half_r = 0.5 * rule.speed.nodes[iu];
                const Vec3 v = V + Vec3(0.0, 0.0, half_r);
                const Vec3 vs = V - Vec3(0.0, 0.0, half_r);
                basis.radial(v.squaredNorm(), pv.data());
                basis.radial(vs.squaredNorm(), ps.data());
                tensor_coords(v, tv);
                tensor_coords(vs, ts);
                const double w_outer = rule.rho2.weights[ir] * rule.z.weights[iz] * rule.speed.weights[iu];
                int col = 0;
                for (std::size_t ic = 0; ic < rule.cosine.size(); ++ic)
                {
                    const double c = rule.cosine.nodes[ic];
                    const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
                    for (int ip = 0; ip < n_half; ++ip, col += 5)
                    {
                        const Vec3 sigma(sn * cos_phi[ip], sn * sin_phi[ip], c);
                        const Vec3 vp = V + half_r * sigma;
                        const Vec3 vps = V - half_r * sigma;
                        basis.radial(vp.squaredNorm(), pp.data());
                        basis.radial(vps.squaredNorm(), pps.data());
                        tensor_coords(vp, tp);
                        tensor_coords(vps, tps);
                        const double sw = std::sqrt(w_outer * rule.cosine.weights[ic] * phi_weight);
                        for (int k = 0; k < 5; ++k)
                        {
                            double* q = Qbuf.col(col + k).data();
                            for (int n = 0; n < N; ++n)
                                q[n] = sw * (pv[n] * tv[k] + ps[n] * ts[k] - pp[n] * tp[k] - pps[n] * tps[k]);
                        }
                    }
                }
                acc.selfadjointView<Eigen::Lower>().rankUpdate(Qbuf);
            }
        }
        partial[ir] = acc.selfadjointView<Eigen::Lower>();
    });
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
    for (const auto& p : partial)
        M += p;
    // 1/4 (Dirichlet form) * (2 pi)^-3 (mu mu*) * 2 pi (azimuth of V) * 4 pi (direction of u)
    // * 1/2 (rho measure) / 5 (orientation average of the tensor factors).
    const double pref = 0.25 * std::pow(2.0 * M_PI, -3.0) * 2.0 * M_PI * 4.0 * M_PI * 0.5 / 5.0;
    return pref * M;
}

struct QuadratureResult
{
    Eigen::MatrixXd M;
    Eigen::MatrixXd difference;
};

std::mutex memo_mutex;
std::map<std::string, QuadratureResult> memo;

QuadratureResult dirichlet_quadrature_memo(const CollisionKernel& kernel, int N, int extra, int threads)
{
    std::ostringstream key;
    key << kernel.describe() << "|N=" << N << "|extra=" << extra;
    const bool cacheable = !kernel.angular().taper;
    if (cacheable)
    {
        std::lock_guard<std::mutex> lock(memo_mutex);
        auto it = memo.find(key.str());
        if (it != memo.end())
            return it->second;
    }
    QuadratureResult result;
    const Eigen::MatrixXd base = dirichlet_quadrature(kernel, N, 0, threads);
    result.M = extra > 0 ? dirichlet_quadrature(kernel, N, extra, threads) : base;
    result.difference = result.M - base;
    if (cacheable)
    {
        std::lock_guard<std::mutex> lock(memo_mutex);
        memo.emplace(key.str(), result);
    }
    return result;
}

// theta sampler for the Monte Carlo route: cutoff laws use sin(theta) b through the
// kernel table; non-cutoff laws use q ~ theta^(1-2s) on [eps, pi/2] (closed-form inverse).
struct ImportanceTheta
{
    const CollisionKernel& kernel;
    double lo_pow = 0.0, hi_pow = 0.0, expo = 0.0, norm = 0.0;

    explicit ImportanceTheta(const CollisionKernel& k) : kernel(k)
    {
        if (!k.is_cutoff())
        {
            expo = 2.0 - 2.0 * k.angular().s;
            lo_pow = std::pow(k.grazing_eps(), expo);
            hi_pow = std::pow(M_PI / 2.0, expo);
            norm = (hi_pow - lo_pow) / expo;
        }
    }

    // Returns theta at CDF level u and the weight sin(theta) b / q.
    std::pair<double, double> at(double u) const
    {
        if (kernel.is_cutoff())
        {
            const ScatteringSampler& s = kernel.sampler();
            return {inverse_cdf(s, u), s.mass()};
        }
        const double th = std::pow(lo_pow + u * (hi_pow - lo_pow), 1.0 / expo);
        const double q = std::pow(th, expo - 1.0) / norm;
        return {th, kernel.sin_b(th) / q};
    }

    static double inverse_cdf(const ScatteringSampler& s, double u)
    {
        // Bisection on the tabulated CDF keeps stratification exact.
        double lo = s.theta_min(), hi = M_PI / 2.0;
        for (int it = 0; it < 60; ++it)
        {
            const double mid = 0.5 * (lo + hi);
            (s.cdf(mid) < u ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }
};

void assemble_monte_carlo(const CollisionKernel& kernel, const SonineTensorBasis& basis,
                          const AssemblyOptions& opt, GalerkinSystem& sys)
{
    const int N = basis.size();
    const int S = opt.strata, B = opt.batches_per_stratum;
    const std::uint64_t per_chunk = std::max<std::uint64_t>(1, opt.samples / (std::uint64_t(S) * B));
    const ImportanceTheta importance(kernel);
    if (kernel.is_cutoff())
        (void)kernel.sampler();

    struct Chunk
    {
        Eigen::MatrixXd sum, sum_sq;
    };
    std::vector<Chunk> chunks(S * B);
    parallel_for(S * B, opt.threads, [&](int idx) {
        const int stratum = idx / B;
        Engine rng = make_engine(opt.seed, static_cast<std::uint64_t>(idx));
        Chunk c{Eigen::MatrixXd::Zero(N, N), Eigen::MatrixXd::Zero(N, N)};
        Eigen::VectorXd hv(N), hs(N), hp(N), hps(N), delta(N);
        for (std::uint64_t k = 0; k < per_chunk; ++k)
        {
            const Vec3 v(standard_normal(rng), standard_normal(rng), standard_normal(rng));
            const Vec3 vs(standard_normal(rng), standard_normal(rng), standard_normal(rng));
            const double u_theta = (stratum + uniform01(rng)) / S;
            const double phi = 2.0 * M_PI * uniform01(rng);
            const auto [theta, wtheta] = importance.at(u_theta);
            const Vec3 u = v - vs;
            const double speed = u.norm();
            if (speed == 0.0)
                continue;
            const Vec3 sigma = sigma_from_angles(u / speed, theta, phi);
            const Vec3 center = 0.5 * (v + vs);
            const Vec3 vp = center + 0.5 * speed * sigma;
            const Vec3 vps = center - 0.5 * speed * sigma;
            auto H = [&](const Vec3& x, Eigen::VectorXd& out) {
                basis.radial(x.squaredNorm(), out.data());
                out *= x.dot(basis.direction() * x);
            };
            H(v, hv);
            H(vs, hs);
            H(vp, hp);
            H(vps, hps);
            delta = hv + hs - hp - hps;
            // 1/4 * |u|^gamma * 2 pi (phi) * weight of theta
            const double w = 0.25 * std::pow(speed, kernel.gamma()) * 2.0 * M_PI * wtheta;
            const Eigen::MatrixXd term = w * delta * delta.transpose();
            c.sum += term;
            c.sum_sq += term.cwiseProduct(term);
        }
        chunks[idx] = std::move(c);
    });

    const double n_chunk = static_cast<double>(per_chunk);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N), var = Eigen::MatrixXd::Zero(N, N);
    sys.stratum_batches.assign(S, {});
    for (int s = 0; s < S; ++s)
    {
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(N, N), sum_sq = Eigen::MatrixXd::Zero(N, N);
        for (int b = 0; b < B; ++b)
        {
            const Chunk& c = chunks[s * B + b];
            sum += c.sum;
            sum_sq += c.sum_sq;
            sys.stratum_batches[s].push_back(c.sum / n_chunk);
        }
        const double n = n_chunk * B;
        const Eigen::MatrixXd mean = sum / n;
        const Eigen::MatrixXd sample_var = (sum_sq / n - mean.cwiseProduct(mean)) * (n / (n - 1.0));
        M += mean / S;
        var += sample_var / (n * S * S);
    }
    sys.M = M;
    sys.mc_error = var.cwiseSqrt();
    sys.samples = per_chunk * S * B;
    for (int n = 0; n < N; ++n)
    {
        if (sys.mc_error(n, n) > 0.05 * std::abs(M(n, n)))
        {
            std::ostringstream os;
            os << "Monte Carlo assembly not converged: diagonal entry " << n << " has relative error "
               << sys.mc_error(n, n) / std::abs(M(n, n));
            sys.warnings.push_back(os.str());
        }
    }
}

}  // namespace

GalerkinSystem assemble_dirichlet(const CollisionKernel& kernel, const SonineTensorBasis& basis, const Mat3& A,
                                  const AssemblyOptions& options)
{
    if (!kernel.is_cutoff() && !(kernel.angular().s < 0.5))
        throw PreconditionError("non-cutoff assembly needs s < 1/2");
    GalerkinSystem sys;
    sys.A = A;
    sys.N = basis.size();
    sys.direction = basis.direction();
    sys.method = options.method;
    if (options.method == AssemblyMethod::Quadrature)
    {
        const QuadratureResult q = dirichlet_quadrature_memo(kernel, basis.size(), options.extra_nodes,
                                                             options.threads);
        sys.M = q.M;
        sys.rule_difference = q.difference;
        sys.mc_error = q.difference.cwiseAbs();
    }
    else
    {
        if (options.samples < 10'000)
            throw PreconditionError("Monte Carlo assembly needs at least 1e4 samples");
        assemble_monte_carlo(kernel, basis, options, sys);
    }
    sys.rhs = assemble_rhs(basis, A);
    return sys;
}

void solve_first_order(GalerkinSystem& sys)
{
    const int N = static_cast<int>(sys.rhs.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.M);
    sys.eigen_min = es.eigenvalues().minCoeff();
    if (!(sys.eigen_min > 0.0))
        throw NonPositiveDefiniteError("smallest eigenvalue " + std::to_string(sys.eigen_min) +
                                       " (under-resolved assembly?)");

    // Conjugate gradient with negative-curvature detection.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
    const double b_norm = sys.rhs.norm();
    if (b_norm > 0.0)
    {
        Eigen::VectorXd r = sys.rhs, p = r, Ap(N);
        double rr = r.squaredNorm();
        for (int it = 0; it < 50 * N && std::sqrt(rr) > 1e-10 * b_norm; ++it)
        {
            Ap.noalias() = sys.M * p;
            const double curvature = p.dot(Ap);
            if (!(curvature > 0.0))
                throw NonPositiveDefiniteError("negative curvature in conjugate gradient");
            const double alpha = rr / curvature;
            x += alpha * p;
            r -= alpha * Ap;
            const double rr_new = r.squaredNorm();
            p = r + (rr_new / rr) * p;
            rr = rr_new;
        }
        if ((sys.rhs - sys.M * x).norm() > 1e-10 * b_norm)
            throw NumericalError("conjugate gradient did not reach relative residual 1e-10");
    }
    sys.coeffs = x;
    sys.a_bar = sys.rhs.dot(x);

    // a_bar = b^T M^-1 b, so d a_bar = -c^T dM c.
    if (!sys.stratum_batches.empty())
    {
        const int S = static_cast<int>(sys.stratum_batches.size());
        double var = 0.0;
        for (const auto& batches : sys.stratum_batches)
        {
            const int B = static_cast<int>(batches.size());
            double mean = 0.0, sq = 0.0;
            for (const auto& m : batches)
            {
                const double q = x.dot(m * x);
                mean += q;
                sq += q * q;
            }
            mean /= B;
            const double bvar = (sq / B - mean * mean) * B / (B - 1.0);
            var += bvar / B / (double(S) * S);
        }
        sys.a_bar_std_err = std::sqrt(std::max(var, 0.0));
    }
    else if (sys.rule_difference.size() > 0)
        sys.a_bar_std_err = std::abs(x.dot(sys.rule_difference * x));
}

GalerkinSystem compute_a_bar(const CollisionKernel& kernel, const Mat3& A, int N, const AssemblyOptions& options)
{
    const SonineTensorBasis basis(N, A);
    GalerkinSystem sys = assemble_dirichlet(kernel, basis, A, options);
    solve_first_order(sys);
    return sys;
}

double a_hat(const CollisionKernel& kernel, int N, int threads)
{
    Mat3 A = Mat3::Zero();
    A(0, 1) = 1.0;
    AssemblyOptions opt;
    opt.threads = threads;
    const GalerkinSystem sys = compute_a_bar(kernel, A, N, opt);
    return sys.a_bar / dev_sym(A).squaredNorm();
}

double evaluate_mu_bar(const Eigen::VectorXd& coeffs, const SonineTensorBasis& basis, double eta, const Vec3& v)
{
    if (!(eta > 0.0))
        throw DomainError("eta must be positive");
    std::vector<double> phi(basis.size());
    basis.values(v, phi.data());
    double acc = 0.0;
    for (int n = 0; n < basis.size(); ++n)
        acc += coeffs[n] * phi[n];
    return -acc / eta;
}

MuBarMoments mu_bar_moments(const Eigen::VectorXd& coeffs, const SonineTensorBasis& basis, double eta,
                            const Mat3& A)
{
    MuBarMoments m{0.0, Vec3::Zero(), 0.0, 0.0, 0.0};
    const int N = basis.size();
    Eigen::VectorXd h(N);
    // mu_bar = mu * H with H polynomial; integrate H * weight against mu.
    gaussian_tensor_quadrature(N + 4, [&](const Vec3& v, double w) {
        basis.radial(v.squaredNorm(), h.data());
        const double H = -coeffs.dot(h) * v.dot(basis.direction() * v) / eta;
        m.mass += w * H;
        m.momentum += w * H * v;
        m.energy += w * H * v.squaredNorm();
        m.driven += w * H * v.dot(A * v);
        m.shear12 += w * H * v.x() * v.y();
    });
    return m;
}

namespace {

OracleResult oracle_pass(const CollisionKernel& kernel, const BatchFunction& h, int count, const Vec3& v,
                         const OracleOptions& o)
{
    const double gamma = kernel.gamma();
    const double eps = kernel.is_cutoff() ? 0.0 : kernel.grazing_eps();
    const double mass = kernel.is_cutoff() ? angular_moment(kernel, AngularWeight::Mass)
                                           : angular_moment(kernel.with_grazing_eps(eps), AngularWeight::Mass);

    // |v - v*| = r: first panel [0,1] with weight r^(2+gamma) exactly, then unit panels.
    std::vector<double> rn, rw;
    {
        const GaussRule gj = gauss_jacobi(o.radial_nodes, 0.0, 2.0 + gamma);
        for (std::size_t i = 0; i < gj.size(); ++i)
        {
            rn.push_back(0.5 * (1.0 + gj.nodes[i]));
            rw.push_back(gj.weights[i] * std::pow(0.5, 3.0 + gamma));
        }
        const double R = v.norm() + o.radial_panels;
        const int panels = static_cast<int>(std::ceil(R - 1.0));
        const GaussRule gl = gauss_legendre(o.radial_nodes, 0.0, (R - 1.0) / panels);
        const double width = (R - 1.0) / panels;
        for (int p = 0; p < panels; ++p)
            for (std::size_t i = 0; i < gl.size(); ++i)
            {
                const double r = 1.0 + p * width + gl.nodes[i];
                rn.push_back(r);
                rw.push_back(gl.weights[i] * std::pow(r, 2.0 + gamma));
            }
    }
    const GaussRule polar = gauss_legendre(o.polar_nodes, -1.0, 1.0);
    // Scattering angle: cutoff laws integrate in c = cos(theta); power laws in log(theta).
    std::vector<double> tc, ts, tw;
    if (kernel.is_cutoff())
    {
        const GaussRule g = gauss_legendre(o.theta_nodes, 0.0, 1.0);
        for (std::size_t i = 0; i < g.size(); ++i)
        {
            const double th = std::acos(g.nodes[i]);
            tc.push_back(g.nodes[i]);
            ts.push_back(std::sin(th));
            tw.push_back(g.weights[i] * angular_density(kernel, th));
        }
    }
    else
    {
        const GaussRule g = gauss_legendre(o.theta_nodes, std::log(eps), std::log(M_PI / 2.0));
        for (std::size_t i = 0; i < g.size(); ++i)
        {
            const double th = std::exp(g.nodes[i]);
            tc.push_back(std::cos(th));
            ts.push_back(std::sin(th));
            tw.push_back(g.weights[i] * th * kernel.sin_b(th));
        }
    }
    std::vector<double> cphi(o.phi_nodes), sphi(o.phi_nodes);
    for (int k = 0; k < o.phi_nodes; ++k)
    {
        const double phi = (k + 0.5) * 2.0 * M_PI / o.phi_nodes;
        cphi[k] = std::cos(phi);
        sphi[k] = std::sin(phi);
    }
    const double phi_w = 2.0 * M_PI / o.phi_nodes;
    const double az_w = 2.0 * M_PI / o.azimuth_nodes;

    std::vector<double> hv(count), hs(count), hp(count), hps(count), gain(count, 0.0), loss(count, 0.0);
    h(v, hv.data());
    const double mu_v = maxwellian(v);
    const double v2 = v.squaredNorm();
    double scale = 0.0;
    for (std::size_t ip = 0; ip < polar.size(); ++ip)
    {
        const double cw = polar.nodes[ip], sw = std::sqrt(std::max(0.0, 1.0 - cw * cw));
        for (int ia = 0; ia < o.azimuth_nodes; ++ia)
        {
            const double az = (ia + 0.5) * az_w;
            const Vec3 omega(sw * std::cos(az), sw * std::sin(az), cw);
            Vec3 e1, e2;
            tangent_frame(omega, e1, e2);
            const double w_dir = polar.weights[ip] * az_w;
            for (std::size_t ir = 0; ir < rn.size(); ++ir)
            {
                const double r = rn[ir];
                const Vec3 vs = v - r * omega;
                // Both gain and loss terms carry exp(-(|v|^2 + |v*|^2)/2); skip negligible nodes.
                if (vs.squaredNorm() - v2 > 120.0 && vs.squaredNorm() > 120.0)
                    continue;
                const double w = w_dir * rw[ir];
                const double mu_s = maxwellian(vs);
                h(vs, hs.data());
                for (int k = 0; k < count; ++k)
                {
                    const double l = 2.0 * M_PI * mass * w * (mu_s * hv[k] + mu_v * hs[k]);
                    loss[k] += l;
                }
                scale += 2.0 * M_PI * mass * w * mu_s * mu_v;
                const Vec3 center = v - 0.5 * r * omega;
                for (std::size_t it = 0; it < tc.size(); ++it)
                {
                    for (int k2 = 0; k2 < o.phi_nodes; ++k2)
                    {
                        const Vec3 sigma = tc[it] * omega + ts[it] * (cphi[k2] * e1 + sphi[k2] * e2);
                        const Vec3 vp = center + 0.5 * r * sigma;
                        const Vec3 vps = center - 0.5 * r * sigma;
                        h(vp, hp.data());
                        h(vps, hps.data());
                        const double mup = maxwellian(vp), mups = maxwellian(vps);
                        const double ww = w * tw[it] * phi_w;
                        for (int k = 0; k < count; ++k)
                            gain[k] += ww * (mups * hp[k] + hps[k] * mup);
                    }
                }
            }
        }
    }
    OracleResult res;
    res.values.resize(count);
    for (int k = 0; k < count; ++k)
        res.values[k] = loss[k] - gain[k];
    res.scale = scale;
    return res;
}

}  // namespace

OracleResult apply_L_oracle(const CollisionKernel& kernel, const BatchFunction& h, int count, const Vec3& v,
                            const OracleOptions& options)
{
    if (!kernel.is_cutoff() && kernel.grazing_eps() <= 0.0)
        throw PreconditionError("the oracle applies a grazing cutoff; grazing_eps must be positive");
    OracleResult fine = oracle_pass(kernel, h, count, v, options);
    fine.errors.assign(count, 0.0);
    if (options.error_estimate)
    {
        OracleOptions coarse = options;
        coarse.radial_nodes = std::max(4, options.radial_nodes - 2);
        coarse.polar_nodes = std::max(6, options.polar_nodes * 3 / 4);
        coarse.azimuth_nodes = std::max(8, options.azimuth_nodes * 3 / 4);
        coarse.theta_nodes = std::max(6, options.theta_nodes * 3 / 4);
        coarse.phi_nodes = std::max(8, options.phi_nodes * 3 / 4);
        const OracleResult c = oracle_pass(kernel, h, count, v, coarse);
        for (int k = 0; k < count; ++k)
        {
            fine.errors[k] = std::abs(fine.values[k] - c.values[k]);
            // Kernel elements map to ~0; judge them against the loss-term magnitude.
            const double ref = std::max(std::abs(fine.values[k]), 1e-2 * fine.scale);
            if (fine.errors[k] > options.tolerance * ref)
                fine.tolerance_met = false;
        }
    }
    return fine;
}

double apply_L_oracle(const CollisionKernel& kernel, const std::function<double(const Vec3&)>& h, const Vec3& v,
                      const OracleOptions& options)
{
    const OracleResult r = apply_L_oracle(
        kernel, [&](const Vec3& x, double* out) { out[0] = h(x); }, 1, v, options);
    return r.values[0];
}

}  // namespace homoenergetic
