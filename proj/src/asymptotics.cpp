#include "homoenergetic/asymptotics.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "homoenergetic/errors.hpp"
#include "homoenergetic/linearized.hpp"
#include "homoenergetic/quadrature.hpp"

namespace homoenergetic {

double ReducedModel::y0() const
{
    return std::pow(beta0, -0.5 * gamma);
}

double ReducedModel::integral_b(double t) const
{
    if (b_integral)
        return b_integral(t);
    if (t == 0.0)
        return 0.0;
    return integrate_adaptive(b, 0.0, t, 1e-12);
}

ReducedModel model_from_family(const DeformationFamily& family, double gamma, double a_bar, double beta0,
                               AMode mode, double a_hat)
{
    family.validate();
    if (!(beta0 > 0.0))
        throw ConfigError("beta0 must be positive");
    ReducedModel m;
    m.gamma = gamma;
    m.beta0 = beta0;
    m.horizon = family.horizon;
    m.label = family.name();
    m.nu = [family](double t) { return std::exp(-trace_integral(family, t)); };
    m.b = [family](double t) { return evaluate_L(family, t).trace() / 3.0; };
    m.b_integral = [family](double t) { return trace_integral(family, t) / 3.0; };
    if (mode == AMode::Exact)
    {
        if (!(a_hat > 0.0))
            throw ConfigError("exact a_t mode needs a positive a_hat");
        m.a = [family, a_hat](double t) { return a_hat * dev_sym(evaluate_L(family, t)).squaredNorm(); };
    }
    else if (family.mode == FamilyMode::CombinedShear)
        m.a = [a_bar](double t) { return a_bar * (1.0 + t) * (1.0 + t); };
    else
        m.a = [a_bar](double) { return a_bar; };
    return m;
}

ReducedModel combined_shear_time_changed(double gamma, double a_bar, double beta0)
{
    ReducedModel m;
    m.gamma = gamma;
    m.beta0 = beta0;
    m.label = "combined_orthogonal_shear_tau";
    m.nu = [](double tau) { return 1.0 / std::sqrt(2.0 * tau + 1.0); };
    m.b = [](double) { return 0.0; };
    m.b_integral = [](double) { return 0.0; };
    m.a = [a_bar](double) { return a_bar; };
    return m;
}

double time_change(double t)
{
    if (!(t >= 0.0))
        throw DomainError("time change needs t >= 0");
    return 0.5 * t * (t + 2.0);
}

double inverse_time_change(double tau)
{
    if (!(tau >= 0.0))
        throw DomainError("inverse time change needs tau >= 0");
    // sqrt(2 tau + 1) - 1 without cancellation
    return 2.0 * tau / (std::sqrt(2.0 * tau + 1.0) + 1.0);
}

namespace {

// int_0^t f(s) ds in u = ln(1+s), which keeps power-law integrands smooth.
double integrate_log_time(const std::function<double(double)>& f, double t, double rel_tol)
{
    if (t == 0.0)
        return 0.0;
    auto g = [&](double u) {
        const double s = std::expm1(u);
        return f(s) * (1.0 + s);
    };
    return integrate_adaptive(g, 0.0, std::log1p(t), rel_tol);
}

void check_model(const ReducedModel& m, double t)
{
    if (!m.nu || !m.b || !m.a)
        throw ConfigError("reduced model needs nu, b and a");
    if (!(t >= 0.0))
        throw DomainError("time must be nonnegative");
    if (t > m.horizon * (1.0 + 1e-12))
        throw PreconditionError("time exceeds the model horizon");
}

}  // namespace

double B_function(const ReducedModel& model, double t, double rel_tol)
{
    check_model(model, t);
    const double It = model.integral_b(t);
    const double g = model.gamma;
    const double forced = integrate_log_time(
        [&](double s) { return model.a(s) / model.nu(s) * std::exp(-g * (It - model.integral_b(s))); }, t,
        rel_tol);
    return model.y0() * std::exp(-g * It) + g / 3.0 * forced;
}

double Z_function(const ReducedModel& model, double t, double rel_tol)
{
    return model.nu(t) * B_function(model, t, rel_tol);
}

double N_function(const ReducedModel& model, double t, double rel_tol)
{
    check_model(model, t);
    const double It = model.integral_b(t);
    const double inner = integrate_log_time(
        [&](double s) { return std::exp(-(It - model.integral_b(s))) / model.nu(s); }, t, rel_tol);
    return model.nu(t) * inner;
}

BetaSeries integrate_beta(const ReducedModel& model, const std::vector<double>& times, double rel_tol)
{
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 1>;
    if (times.empty())
        throw PreconditionError("integrate_beta needs output times");
    for (std::size_t i = 0; i < times.size(); ++i)
    {
        check_model(model, times[i]);
        if (i > 0 && !(times[i] > times[i - 1]))
            throw PreconditionError("output times must be strictly increasing");
    }
    const double g = model.gamma;
    auto rhs = [&](const State& y, State& dy, double t) {
        dy[0] = -g * model.b(t) * y[0] + g * model.a(t) / (3.0 * model.nu(t));
    };

    std::vector<double> grid;
    const bool prepend = times.front() > 0.0;
    if (prepend)
        grid.push_back(0.0);
    grid.insert(grid.end(), times.begin(), times.end());

    BetaSeries out;
    State y{model.y0()};
    auto observer = [&](const State& s, double t) {
        if (!(s[0] > 0.0) || !std::isfinite(s[0]))
        {
            std::ostringstream os;
            os << "beta^(-gamma/2) left (0, inf) at t = " << t;
            throw StepFailureError(os.str());
        }
        if (prepend && t == 0.0 && out.t.empty() && times.front() != 0.0)
            return;
        out.t.push_back(t);
        out.y.push_back(s[0]);
    };
    auto stepper = odeint::make_dense_output(1e-14 * model.y0(), rel_tol, odeint::runge_kutta_dopri5<State>());
    const double dt0 = grid.size() > 1 ? std::min(1e-3, 0.01 * (grid[1] - grid[0])) : 1e-3;
    if (grid.size() == 1)
        observer(y, grid[0]);
    else
        odeint::integrate_times(stepper, rhs, y, grid.begin(), grid.end(), dt0, observer);

    for (std::size_t i = 0; i < out.t.size(); ++i)
    {
        const double t = out.t[i];
        const double nu = model.nu(t);
        const double B = B_function(model, t);
        out.y_quadrature.push_back(B);
        out.Z.push_back(nu * B);
        out.eta.push_back(nu * out.y[i]);
    }
    return out;
}

namespace {

double decade_slope(const std::vector<double>& t, const std::vector<double>& r)
{
    const double t_end = t.back();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
    {
        if (t[i] < t_end / 10.0)
            continue;
        const double x = std::log(t[i]), y = std::log(r[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2)
        return std::nan("");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

GrowthReport check_growth_assumption(const ReducedModel& model, const std::vector<double>& t_grid)
{
    if (t_grid.empty() || t_grid.back() < 100.0)
        throw PreconditionError("growth check needs a grid reaching t >= 100");
    ReducedModel unit = model;
    unit.beta0 = 1.0;
    GrowthReport rep;
    rep.ratio_min = INFINITY;
    rep.ratio_max = 0.0;
    bool finite = true;
    for (double t : t_grid)
    {
        if (!(t > 0.0))
            continue;
        double z = NAN, n = NAN;
        try
        {
            z = Z_function(unit, t) / (1.0 + t);
            n = N_function(unit, t) / t;
        }
        catch (const NumericalError&)
        {
            finite = false;
        }
        if (!std::isfinite(z) || !std::isfinite(n))
            finite = false;
        rep.t.push_back(t);
        rep.z_ratio.push_back(z);
        rep.n_ratio.push_back(n);
        for (double r : {z, n})
        {
            if (std::isnan(r))
                continue;
            rep.ratio_min = std::min(rep.ratio_min, r);
            rep.ratio_max = std::max(rep.ratio_max, r);
        }
        const double h = 1e-5 * std::max(1.0, t);
        const double dlog = (std::log(model.nu(t + h)) - std::log(model.nu(t - std::min(h, t)))) / (h + std::min(h, t));
        rep.nu_log_derivative_max = std::max(rep.nu_log_derivative_max, std::abs(dlog));
    }
    if (finite)
    {
        rep.z_slope = decade_slope(rep.t, rep.z_ratio);
        rep.n_slope = decade_slope(rep.t, rep.n_ratio);
    }
    else
        rep.z_slope = rep.n_slope = NAN;
    const bool bounded = finite && rep.ratio_min >= 1.0 / rep.bound && rep.ratio_max <= rep.bound;
    const bool flat = std::abs(rep.z_slope) < rep.slope_tolerance && std::abs(rep.n_slope) < rep.slope_tolerance;
    rep.pass = bounded && flat;
    std::ostringstream os;
    if (!finite)
        os << "ratios not finite on the grid";
    else
        os << "ratios in [" << rep.ratio_min << ", " << rep.ratio_max << "], last-decade log-slopes "
           << rep.z_slope << " (Z) and " << rep.n_slope << " (N); thresholds [1/64, 64] and 0.1 are"
           << " conventional choices";
    rep.detail = os.str();
    return rep;
}

ReducedModel assumption_model(const DeformationFamily& family, double gamma, double a_bar)
{
    if (family.mode == FamilyMode::CombinedShear)
        return combined_shear_time_changed(gamma, a_bar, 1.0);
    return model_from_family(family, gamma, a_bar, 1.0);
}

PredictedLimit predicted_limit(const DeformationFamily& family, double gamma, double a_bar, double r_integral)
{
    switch (family.mode)
    {
    case FamilyMode::SimpleShear:
        return {1, gamma * a_bar / 3.0};
    case FamilyMode::DecayingDilatation:
        return {2, gamma * a_bar / (gamma + 6.0) * std::exp(r_integral)};
    case FamilyMode::CombinedShear:
        return {3, gamma * a_bar / 9.0};
    case FamilyMode::ExactFromL0:
        break;
    }
    throw FamilyMismatchError("no predicted limit for a generic L0 family");
}

std::pair<double, double> default_fit_window(double t_end)
{
    return {std::max(10.0, 0.1 * t_end), t_end};
}

FitResult fit_power_law(const std::vector<double>& t, const std::vector<double>& y, double t_min, double t_max)
{
    if (t.size() != y.size())
        throw PreconditionError("time and value series differ in length");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i)
    {
        if (t[i] < t_min || t[i] > t_max)
            continue;
        if (!(y[i] > 0.0) || !(t[i] > 0.0))
            throw DomainError("power-law fit needs positive times and values");
        xs.push_back(std::log(t[i]));
        ys.push_back(std::log(y[i]));
    }
    const int n = static_cast<int>(xs.size());
    if (n < 20)
        throw InsufficientDataError("power-law fit needs at least 20 points in the window, got " +
                                    std::to_string(n));
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i)
    {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i)
    {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    FitResult f;
    f.exponent = sxy / sxx;
    f.prefactor = std::exp(my - f.exponent * mx);
    double ss_res = 0.0;
    for (int i = 0; i < n; ++i)
    {
        const double e = ys[i] - (my + f.exponent * (xs[i] - mx));
        ss_res += e * e;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    f.t_min = t_min;
    f.t_max = t_max;
    f.points = n;
    return f;
}

FixedExponentFit fit_fixed_exponent(const std::vector<double>& t, const std::vector<double>& y, double p,
                                    double t_min, double t_max)
{
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t_min && t[i] <= t_max)
        {
            xs.push_back(std::pow(t[i], p));
            ys.push_back(y[i]);
        }
    const int n = static_cast<int>(xs.size());
    if (n < 20)
        throw InsufficientDataError("fit needs at least 20 points in the window, got " + std::to_string(n));
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i)
    {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i)
    {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    FixedExponentFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (int i = 0; i < n; ++i)
    {
        const double e = ys[i] - f.intercept - f.slope * xs[i];
        ss_res += e * e;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    f.points = n;
    return f;
}

}  // namespace homoenergetic
