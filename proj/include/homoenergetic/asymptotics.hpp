#pragma once

#include <functional>
#include <string>
#include <vector>

#include "homoenergetic/deformation.hpp"

namespace homoenergetic {

using TimeFunction = std::function<double(double)>;

enum class AMode
{
    Frozen,  //!< a_t = a_bar in the frame where the deformation has a constant limit
    Exact    //!< a_t = a_hat |dev sym L_t|^2
};

/*!
 * Reduced inverse-temperature model
 *   y' = -gamma b_t y + gamma a_t / (3 nu_t),  y = beta^(-gamma/2),
 * with collision weight nu_t, trace rate b_t = tr L_t / 3 and forcing a_t.
 */
struct ReducedModel
{
    TimeFunction nu;
    TimeFunction b;
    TimeFunction a;
    //! Optional closed form of int_0^t b; integrated numerically when empty.
    TimeFunction b_integral;
    double gamma = 0.5;
    double beta0 = 1e-3;
    double horizon = 1e300;
    std::string label;

    double y0() const;
    double integral_b(double t) const;
};

/*!
 * Model derived from a deformation family: nu = rho_t, b = tr L_t / 3.
 *
 * Frozen mode: a_t = a_bar, except for combined orthogonal shear where the
 * constant sits in the time-changed frame and a_t = a_bar (1+t)^2.
 * Exact mode: a_t = a_hat |dev sym L_t|^2, with a_hat = a_bar / |dev sym A0|^2.
 */
ReducedModel model_from_family(const DeformationFamily& family, double gamma, double a_bar, double beta0,
                               AMode mode = AMode::Frozen, double a_hat = 0.0);

//! Combined-shear model in tau: nu = (2 tau + 1)^(-1/2), b = 0, a = a_bar.
ReducedModel combined_shear_time_changed(double gamma, double a_bar, double beta0);

//! tau = ((1+t)^2 - 1)/2; DomainError for t < 0.
double time_change(double t);
//! t = sqrt(2 tau + 1) - 1; DomainError for tau < 0.
double inverse_time_change(double tau);

struct BetaSeries
{
    std::vector<double> t;
    std::vector<double> y;           //!< beta^(-gamma/2) from the ODE
    std::vector<double> y_quadrature; //!< same quantity from the integral representation B_t
    std::vector<double> Z;
    std::vector<double> eta;         //!< nu_t y
};

/*!
 * Dormand-Prince 5(4) with dense output at relative tolerance 1e-10, sampled
 * at `times` (sorted, starting at or after 0, ending at or before the horizon).
 */
BetaSeries integrate_beta(const ReducedModel& model, const std::vector<double>& times, double rel_tol = 1e-10);

//! Integral representation B_t of the solution (adaptive quadrature).
double B_function(const ReducedModel& model, double t, double rel_tol = 1e-11);

//! Z_t = beta0^(-gamma/2) nu_t e^(-gamma int b) + (gamma/3) int_0^t (nu_t a_s / nu_s) e^(-gamma int_s^t b) ds.
double Z_function(const ReducedModel& model, double t, double rel_tol = 1e-11);

//! N_t = int_0^t (nu_t / nu_s) e^(-int_s^t b) ds.
double N_function(const ReducedModel& model, double t, double rel_tol = 1e-11);

struct GrowthReport
{
    double ratio_min = 0.0;   //!< over both Z_t(1)/(1+t) and N_t/t
    double ratio_max = 0.0;
    double z_slope = 0.0;     //!< log-slope of Z_t(1)/(1+t) over the last decade
    double n_slope = 0.0;
    double nu_log_derivative_max = 0.0;  //!< sup |nu'/nu| on the grid
    std::vector<double> t, z_ratio, n_ratio;
    double bound = 64.0;
    double slope_tolerance = 0.1;
    bool pass = false;
    std::string detail;
};

//! Z_t(1)/(1+t) and N_t/t on the grid, both within [1/64, 64] with flat log-slope.
GrowthReport check_growth_assumption(const ReducedModel& model, const std::vector<double>& t_grid);

//! Model on which the growth assumption is checked: the time-changed one for combined shear.
ReducedModel assumption_model(const DeformationFamily& family, double gamma, double a_bar);

struct PredictedLimit
{
    int exponent = 0;
    double constant = 0.0;
};

//! (1, gamma a/3), (2, gamma a/(gamma+6) e^(int r)), (3, gamma a/9) for the three families.
PredictedLimit predicted_limit(const DeformationFamily& family, double gamma, double a_bar, double r_integral = 0.0);

struct FitResult
{
    double exponent = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
    double t_min = 0.0, t_max = 0.0;
    int points = 0;
};

//! Default window [max(10, 0.1 t_end), t_end].
std::pair<double, double> default_fit_window(double t_end);

//! Log-log least squares of y ~ prefactor t^exponent inside [t_min, t_max]; at least 20 points.
FitResult fit_power_law(const std::vector<double>& t, const std::vector<double>& y, double t_min, double t_max);

struct FixedExponentFit
{
    double slope = 0.0;      //!< coefficient of t^p
    double intercept = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

//! Least squares y = slope t^p + intercept inside the window.
FixedExponentFit fit_fixed_exponent(const std::vector<double>& t, const std::vector<double>& y, double p,
                                    double t_min, double t_max);

}  // namespace homoenergetic
