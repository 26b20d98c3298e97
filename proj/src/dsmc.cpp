#include "homoenergetic/dsmc.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "homoenergetic/entropy.hpp"
#include "homoenergetic/errors.hpp"
#include "homoenergetic/linearized.hpp"

namespace homoenergetic {

ParticleEnsemble::ParticleEnsemble(std::vector<Vec3> w, std::uint64_t seed, double t_, double rho_)
    : t(t_), rho(rho_), rng(make_engine(seed)), xi_(std::move(w))
{
    recompute_sums();
}

std::vector<Vec3> ParticleEnsemble::velocities() const
{
    std::vector<Vec3> out(xi_.size());
    for (std::size_t i = 0; i < xi_.size(); ++i)
        out[i] = G_ * xi_[i];
    return out;
}

void ParticleEnsemble::recompute_sums()
{
    sum_.setZero();
    sum_sq_.setZero();
    for (const Vec3& x : xi_)
    {
        sum_ += x;
        sum_sq_.noalias() += x * x.transpose();
    }
    center_ = xi_.empty() ? Vec3::Zero() : Vec3(sum_ / double(xi_.size()));
    radius_ = 0.0;
    for (const Vec3& x : xi_)
        radius_ = std::max(radius_, (x - center_).norm());
}

void ParticleEnsemble::apply_flow(const Mat3& Phi)
{
    G_ = Phi * G_;
    G_inv_ = G_.inverse();
}

void ParticleEnsemble::fold()
{
    if (G_ == Mat3::Identity())
        return;
    for (Vec3& x : xi_)
        x = G_ * x;
    G_.setIdentity();
    G_inv_.setIdentity();
    recompute_sums();
    ++stats.folds;
}

double ParticleEnsemble::temperature_estimate() const
{
    const double n = static_cast<double>(xi_.size());
    const Vec3 mean = sum_ / n;
    const Mat3 cov = sum_sq_ / n - mean * mean.transpose();
    return (G_ * cov * G_.transpose()).trace() / 3.0;
}

double ParticleEnsemble::relative_speed_bound() const
{
    Eigen::SelfAdjointEigenSolver<Mat3> es;
    es.computeDirect(G_.transpose() * G_, Eigen::EigenvaluesOnly);
    return 2.0 * std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff())) * radius_;
}

void ParticleEnsemble::set_xi(std::size_t i, const Vec3& x)
{
    if (journaling_)
        undo_.push_back({i, xi_[i]});
    const Vec3& old = xi_[i];
    sum_ += x - old;
    sum_sq_.noalias() += x * x.transpose() - old * old.transpose();
    radius_ = std::max(radius_, (x - center_).norm());
    xi_[i] = x;
}

void ParticleEnsemble::collide(std::size_t i, std::size_t j, const Vec3& sigma)
{
    const auto [vp, vps] = post_collisional({G_ * xi_[i], G_ * xi_[j], sigma});
    set_xi(i, G_inv_ * vp);
    set_xi(j, G_inv_ * vps);
}

void ParticleEnsemble::begin_transaction()
{
    journaling_ = true;
    undo_.clear();
    snapshot_ = {radius_, sum_, sum_sq_, stats};
}

void ParticleEnsemble::rollback()
{
    for (auto it = undo_.rbegin(); it != undo_.rend(); ++it)
        xi_[it->index] = it->xi;
    radius_ = snapshot_.radius;
    sum_ = snapshot_.sum;
    sum_sq_ = snapshot_.sum_sq;
    stats = snapshot_.stats;
    undo_.clear();
    journaling_ = false;
}

void ParticleEnsemble::commit()
{
    undo_.clear();
    journaling_ = false;
}

ParticleEnsemble init_ensemble(std::size_t N, const InitialCondition& init, std::uint64_t seed)
{
    if (N < 1000)
        throw PreconditionError("ensembles need at least 1000 particles");
    if (!(init.T0 > 0.0))
        throw ConfigError("initial temperature must be positive");
    Engine rng = make_engine(seed, 0);
    std::vector<Vec3> w(N);
    for (Vec3& x : w)
        for (int k = 0; k < 3; ++k)
            x[k] = standard_normal(rng);

    if (init.kind == InitialKind::PerturbedMaxwellian)
    {
        const Mat3 D = dev_sym(init.direction);
        const double norm = D.norm();
        const Mat3 C = Mat3::Identity() + (norm > 0.0 ? Mat3(init.amplitude * D / norm) : Mat3::Zero());
        Eigen::LLT<Mat3> llt(C);
        if (llt.info() != Eigen::Success)
            throw ConfigError("perturbation amplitude makes the covariance indefinite");
        const Mat3 Lc = llt.matrixL();
        for (Vec3& x : w)
            x = Lc * x;
    }

    Vec3 mean = Vec3::Zero();
    for (const Vec3& x : w)
        mean += x;
    mean /= double(N);
    double ss = 0.0;
    for (const Vec3& x : w)
        ss += (x - mean).squaredNorm();
    const double T_emp = ss / (3.0 * N);
    const double scale = std::sqrt(init.T0 / T_emp);
    for (Vec3& x : w)
        x = init.V0 + scale * (x - mean);
    return ParticleEnsemble(std::move(w), substream_seed(seed, 1));
}

void drift_step(ParticleEnsemble& ens, const DeformationFamily& family, double dt, double dt_max)
{
    if (!(dt >= 0.0))
        throw DomainError("drift step needs dt >= 0");
    if (dt > dt_max)
        throw PreconditionError("drift step exceeds dt_max");
    if (dt == 0.0)
        return;
    const double t1 = ens.t + dt;
    ens.apply_flow(exact_flow(family, ens.t, t1));
    ens.t = t1;
    ens.rho = std::exp(-trace_integral(family, t1));
}

std::uint64_t collision_step(ParticleEnsemble& ens, const CollisionKernel& kernel, double dt,
                             const CollisionStepOptions& options)
{
    if (!(dt >= 0.0))
        throw DomainError("collision step needs dt >= 0");
    const std::size_t N = ens.size();
    if (dt == 0.0 || N < 2)
        return 0;
    const double gamma = kernel.gamma();
    const double mass = kernel.sampler().mass();
    double vmax = options.headroom * ens.relative_speed_bound();
    if (gamma > 0.0 && !(vmax > 0.0))
        return 0;

    for (int attempt = 0; attempt <= options.max_retries; ++attempt)
    {
        ens.begin_transaction();
        const double rate = 0.5 * double(N) * ens.rho * 2.0 * M_PI * mass * (gamma > 0.0 ? std::pow(vmax, gamma) : 1.0) * dt;
        const std::uint64_t n = poisson(ens.rng, rate);
        std::uint64_t accepted = 0;
        double violation = 0.0;
        for (std::uint64_t c = 0; c < n; ++c)
        {
            const std::size_t i = uniform_index(ens.rng, N);
            std::size_t j = uniform_index(ens.rng, N - 1);
            if (j >= i)
                ++j;
            ++ens.stats.candidates;
            const Vec3 u = ens.velocity(i) - ens.velocity(j);
            const double s = u.norm();
            if (gamma > 0.0)
            {
                if (s > vmax)
                {
                    violation = s;
                    break;
                }
                const double ratio = s / vmax;
                const double p = gamma == 0.5 ? std::sqrt(ratio) : std::pow(ratio, gamma);
                if (!(uniform01(ens.rng) < p))
                    continue;
            }
            if (s == 0.0)
                continue;
            const auto [theta, phi] = sample_scattering(kernel, ens.rng);
            ens.collide(i, j, sigma_from_angles(u / s, theta, phi));
            ++accepted;
        }
        if (violation == 0.0)
        {
            ens.commit();
            ens.stats.accepted += accepted;
            return accepted;
        }
        ens.rollback();
        ++ens.stats.majorant_retries;
        vmax = std::max(1.25 * vmax, options.headroom * violation);
    }
    throw MajorantViolation("relative speed above the majorant after " + std::to_string(options.max_retries) +
                            " rebuilds");
}

MacroState macroscopic(const std::vector<Vec3>& w, double rho, const Mat3& L)
{
    MacroState m;
    m.rho = rho;
    const double n = static_cast<double>(w.size());
    if (w.empty())
        throw PreconditionError("empty ensemble");
    for (const Vec3& x : w)
        m.V += x;
    m.V /= n;
    for (const Vec3& x : w)
    {
        const Vec3 c = x - m.V;
        m.P.noalias() += c * c.transpose();
    }
    m.P /= n;
    m.T = m.P.trace() / 3.0;
    m.beta = 1.0 / m.T;
    m.alpha = L.cwiseProduct(m.P).sum() / (3.0 * m.T);
    return m;
}

MacroState macroscopic(const ParticleEnsemble& ens, const Mat3& L)
{
    return macroscopic(ens.velocities(), ens.rho, L);
}

std::vector<Vec3> rescaled_velocities(const std::vector<Vec3>& w, const MacroState& state)
{
    std::vector<Vec3> out(w.size());
    const double s = 1.0 / std::sqrt(state.T);
    for (std::size_t i = 0; i < w.size(); ++i)
        out[i] = s * (w[i] - state.V);
    return out;
}

PerturbationReport perturbation_moments(const std::vector<Vec3>& rescaled, const std::vector<double>& weights,
                                        const Mat3& A, double a_bar, double eta)
{
    if (!(eta > 0.0))
        throw DomainError("eta must be positive");
    if (!weights.empty() && weights.size() != rescaled.size())
        throw PreconditionError("weights and sample differ in length");
    const Mat3 A0 = dev_sym(A);
    const double n = static_cast<double>(rescaled.size());
    double s = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < rescaled.size(); ++i)
    {
        const double q = rescaled[i].dot(A0 * rescaled[i]) * (weights.empty() ? 1.0 : weights[i]);
        s += q;
        ss += q * q;
    }
    PerturbationReport r;
    r.measured = s / n;
    r.std_err = std::sqrt(std::max(0.0, (ss / n - r.measured * r.measured) / (n - 1.0)));
    r.predicted = -a_bar / eta;
    r.residual = r.measured - r.predicted;
    r.deviation_sigma = r.std_err > 0.0 ? std::abs(r.residual) / r.std_err : INFINITY;
    return r;
}

Mat3 limit_direction(const DeformationFamily& f)
{
    Mat3 A = Mat3::Zero();
    switch (f.mode)
    {
    case FamilyMode::SimpleShear:
        A(0, 1) = f.K;
        return A;
    case FamilyMode::DecayingDilatation:
        A(0, 1) = f.K2;
        return A;
    case FamilyMode::CombinedShear:
        A(0, 2) = -f.K1 * f.K3;
        return A;
    case FamilyMode::ExactFromL0:
        return f.L0;
    }
    return A;
}

namespace {

void check_config(const SimulationConfig& c)
{
    if (!(c.t_end > 0.0))
        throw ConfigError("t_end must be positive");
    if (!(c.output_dt > 0.0))
        throw ConfigError("output_dt must be positive");
    if (!(c.dt_max > 0.0))
        throw ConfigError("dt_max must be positive");
    if (!(c.beta0 > 0.0))
        throw ConfigError("beta0 must be positive");
    if (!(c.collision_fraction > 0.0) || !(c.drift_fraction > 0.0))
        throw ConfigError("step fractions must be positive");
    if (c.family.horizon < c.t_end)
        throw ConfigError("t_end exceeds the family horizon");
    if (c.entropy && c.entropy_every < 1)
        throw ConfigError("entropy_every must be at least 1");
}

}  // namespace

SimulationRecord run_scenario(const SimulationConfig& cfg, const ProgressCallback& progress)
{
    check_config(cfg);
    cfg.family.validate();
    SimulationRecord rec;
    rec.seed = cfg.seed;
    const double gamma = cfg.kernel.gamma();

    const Mat3 A0 = limit_direction(cfg.family);
    const double dir2 = dev_sym(A0).squaredNorm();
    if (dir2 == 0.0)
    {
        rec.a_bar = 0.0;
        rec.a_hat = cfg.a_bar;
    }
    else if (cfg.a_bar > 0.0)
    {
        rec.a_bar = cfg.a_bar;
        rec.a_hat = cfg.a_bar / dir2;
    }
    else
    {
        rec.a_hat = a_hat(cfg.kernel, cfg.basis_size);
        rec.a_bar = rec.a_hat * dir2;
    }
    const ReducedModel model = rec.a_hat > 0.0 && dir2 > 0.0
                                   ? model_from_family(cfg.family, gamma, rec.a_bar, cfg.beta0, AMode::Exact, rec.a_hat)
                                   : model_from_family(cfg.family, gamma, 0.0, cfg.beta0);
    if (cfg.family.mode == FamilyMode::DecayingDilatation && !cfg.family.idealized())
        rec.r_integral = r_integral_closed_form(cfg.family);
    if (cfg.family.mode != FamilyMode::ExactFromL0)
        rec.predicted = predicted_limit(cfg.family, gamma, rec.a_bar, rec.r_integral);

    InitialCondition ic = cfg.initial;
    ic.T0 = 1.0 / cfg.beta0;
    ParticleEnsemble ens = init_ensemble(cfg.N, ic, cfg.seed);
    ens.rho = std::exp(-trace_integral(cfg.family, 0.0));

    const double mass = cfg.kernel.sampler().mass();
    const double speed_moment = std::tgamma(0.5 * (3.0 + gamma)) / std::tgamma(1.5);
    const int n_out = static_cast<int>(std::ceil(cfg.t_end / cfg.output_dt - 1e-9));

    auto observe = [&](int k) {
        ens.fold();
        const std::vector<Vec3> w = ens.velocities();
        OutputRow row;
        row.t = ens.t;
        row.state = macroscopic(w, ens.rho, evaluate_L(cfg.family, ens.t));
        row.beta_pow = std::pow(row.state.T, 0.5 * gamma);
        row.eta = model.nu(ens.t) * row.beta_pow;
        row.Z = Z_function(model, ens.t);
        row.collisions = ens.stats.accepted;
        if (cfg.entropy && k % cfg.entropy_every == 0)
        {
            const std::size_t stride = std::max<std::size_t>(1, w.size() / cfg.entropy_subsample);
            std::vector<Vec3> sub;
            const double s = 1.0 / std::sqrt(row.state.T);
            for (std::size_t i = 0; i < w.size() && sub.size() < cfg.entropy_subsample; i += stride)
                sub.push_back(s * (w[i] - row.state.V));
            const EntropyEstimate e = kl_entropy(sub, 4, cfg.entropy_bootstrap, substream_seed(cfg.seed, 1000 + k));
            row.entropy = e.value;
            row.entropy_err = e.std_err;
        }
        rec.rows.push_back(row);
        if (progress)
            progress(row);
    };

    try
    {
        observe(0);
        for (int k = 0; k < n_out; ++k)
        {
            const double t_next = std::min((k + 1) * cfg.output_dt, cfg.t_end);
            bool reached = false;
            while (!reached)
            {
                const double T = ens.temperature_estimate();
                const double rate = ens.rho * 2.0 * M_PI * mass * std::pow(4.0 * T, 0.5 * gamma) * speed_moment;
                double dt = std::min(cfg.collision_fraction / rate, cfg.dt_max);
                const double Lnorm = evaluate_L(cfg.family, ens.t).norm();
                if (Lnorm > 0.0)
                    dt = std::min(dt, cfg.drift_fraction / Lnorm);
                if (ens.t + dt >= t_next - 1e-12 * std::max(1.0, t_next))
                {
                    dt = t_next - ens.t;
                    reached = true;
                }
                const double t0 = ens.t;
                drift_step(ens, cfg.family, 0.5 * dt);
                collision_step(ens, cfg.kernel, dt, cfg.collision);
                if (reached)
                {
                    // Land exactly on the output time.
                    ens.apply_flow(exact_flow(cfg.family, ens.t, t_next));
                    ens.t = t_next;
                    ens.rho = std::exp(-trace_integral(cfg.family, t_next));
                }
                else
                    drift_step(ens, cfg.family, (t0 + dt) - ens.t);
                if ((ens.frame() - Mat3::Identity()).norm() > cfg.fold_threshold)
                    ens.fold();
            }
            observe(k + 1);
        }
    }
    catch (const Error& e)
    {
        rec.incomplete = true;
        rec.error = e.what();
    }
    rec.stats = ens.stats;
    analyse_record(rec, cfg);
    return rec;
}

std::vector<double> driven_part(const SimulationRecord& record, const SimulationConfig& cfg)
{
    const double gamma = cfg.kernel.gamma();
    const double y0 = std::pow(cfg.beta0, -0.5 * gamma);
    std::vector<double> out;
    out.reserve(record.rows.size());
    for (const OutputRow& r : record.rows)
        out.push_back(r.beta_pow - y0 * std::exp(-gamma * trace_integral(cfg.family, r.t) / 3.0));
    return out;
}

void analyse_record(SimulationRecord& rec, const SimulationConfig& cfg)
{
    rec.sandwich_min = INFINITY;
    rec.sandwich_max = 0.0;
    for (const OutputRow& r : rec.rows)
    {
        const double q = r.eta / r.Z;
        rec.sandwich_min = std::min(rec.sandwich_min, q);
        rec.sandwich_max = std::max(rec.sandwich_max, q);
    }
    rec.sandwich_ok = !rec.rows.empty() && rec.sandwich_min >= 0.25 && rec.sandwich_max <= 4.0;

    rec.fits_available = false;
    if (rec.predicted.exponent <= 0 || rec.rows.empty())
        return;
    const auto window = cfg.fit_window ? *cfg.fit_window : default_fit_window(cfg.t_end);
    std::vector<double> t, y, T;
    for (const OutputRow& r : rec.rows)
    {
        t.push_back(r.t);
        y.push_back(r.beta_pow);
        T.push_back(r.state.T);
    }
    try
    {
        const std::vector<double> yd = driven_part(rec, cfg);
        rec.fit_raw = fit_power_law(t, y, window.first, window.second);
        rec.fit_driven = fit_power_law(t, yd, window.first, window.second);
        rec.prefactor_fit = fit_fixed_exponent(t, yd, rec.predicted.exponent, window.first, window.second);
        rec.log_T_slope = fit_power_law(t, T, window.first, window.second).exponent;
        rec.fits_available = true;
    }
    catch (const NumericalError& e)
    {
        rec.warnings.push_back(std::string("fit unavailable: ") + e.what());
    }
}

std::vector<SimulationRecord> run_replicas(const SimulationConfig& config, int replicas, int threads)
{
    if (replicas < 1)
        throw ConfigError("need at least one replica");
    std::vector<SimulationRecord> out(replicas);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int r = next++; r < replicas; r = next++)
        {
            try
            {
                SimulationConfig c = config;
                c.seed = substream_seed(config.seed, static_cast<std::uint64_t>(r));
                out[r] = run_scenario(c);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const int n_workers = std::max(1, std::min(threads, replicas));
    if (n_workers == 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

SimulationRecord replica_average(const std::vector<SimulationRecord>& replicas, const SimulationConfig& config)
{
    if (replicas.empty())
        throw PreconditionError("no replicas to average");
    SimulationRecord avg = replicas.front();
    avg.warnings.clear();
    std::size_t rows = avg.rows.size();
    for (const auto& r : replicas)
    {
        rows = std::min(rows, r.rows.size());
        avg.incomplete = avg.incomplete || r.incomplete;
    }
    avg.rows.resize(rows);
    const double n = static_cast<double>(replicas.size());
    for (std::size_t i = 0; i < rows; ++i)
    {
        OutputRow& a = avg.rows[i];
        double y = 0.0, eta = 0.0, T = 0.0;
        Mat3 P = Mat3::Zero();
        for (const auto& r : replicas)
        {
            y += r.rows[i].beta_pow;
            eta += r.rows[i].eta;
            T += r.rows[i].state.T;
            P += r.rows[i].state.P;
        }
        a.beta_pow = y / n;
        a.eta = eta / n;
        a.state.T = T / n;
        a.state.beta = 1.0 / a.state.T;
        a.state.P = P / n;
    }
    analyse_record(avg, config);
    return avg;
}

void write_csv(const SimulationRecord& record, std::ostream& out)
{
    out << "t,rho,Vx,Vy,Vz,T,beta,beta_pow,P11,P12,P13,P21,P22,P23,P31,P32,P33,eta,Z,entropy,collisions_accepted\n";
    char buf[64];
    auto num = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf;
    };
    for (const OutputRow& r : record.rows)
    {
        num(r.t);
        out << ',';
        num(r.state.rho);
        for (int k = 0; k < 3; ++k)
        {
            out << ',';
            num(r.state.V[k]);
        }
        out << ',';
        num(r.state.T);
        out << ',';
        num(r.state.beta);
        out << ',';
        num(r.beta_pow);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
            {
                out << ',';
                num(r.state.P(i, j));
            }
        out << ',';
        num(r.eta);
        out << ',';
        num(r.Z);
        out << ',';
        if (!std::isnan(r.entropy))
            num(r.entropy);
        out << ',' << r.collisions << '\n';
    }
}

}  // namespace homoenergetic
