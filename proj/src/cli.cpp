#include "homoenergetic/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "homoenergetic/asymptotics.hpp"
#include "homoenergetic/config.hpp"
#include "homoenergetic/dsmc.hpp"
#include "homoenergetic/errors.hpp"
#include "homoenergetic/linearized.hpp"
#include "homoenergetic/validation.hpp"

namespace homoenergetic {

namespace fs = std::filesystem;

namespace {

struct CommonFlags
{
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool quick = false;
};

// abar flags that map onto config keys; unset ones leave the document alone.
struct AbarFlags
{
    std::optional<double> gamma, s, Kb, b0, eps, K, K1, K2, K3, lambda;
    std::optional<std::string> angular, family, method;
    std::optional<int> N;
    std::optional<long long> samples;
    bool extrapolate = false;
};

struct RunOutcome
{
    int code = 0;
    Json summary;
};

std::string utc_now()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int default_threads()
{
    if (const char* env = std::getenv("HOMOEN_THREADS"))
    {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n >= 1)
            return static_cast<int>(n);
    }
    return 1;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot write '" + path.string() + "'");
    f << text;
}

void write_json(const fs::path& path, const Json& j)
{
    write_text(path, j.dump(2) + "\n");
}

Json fit_json(const FitResult& f)
{
    return {{"exponent", f.exponent}, {"prefactor", f.prefactor}, {"r_squared", f.r_squared},
            {"t_min", f.t_min},       {"t_max", f.t_max},         {"points", f.points}};
}

Json record_json(const SimulationRecord& r)
{
    Json j;
    j["seed"] = r.seed;
    j["complete"] = !r.incomplete;
    if (r.incomplete)
        j["error"] = r.error;
    if (r.fits_available)
    {
        j["fit_driven"] = fit_json(r.fit_driven);
        j["fit_raw"] = fit_json(r.fit_raw);
        j["prefactor_fit"] = {{"slope", r.prefactor_fit.slope},
                              {"intercept", r.prefactor_fit.intercept},
                              {"r_squared", r.prefactor_fit.r_squared}};
        j["log_T_slope"] = r.log_T_slope;
    }
    j["sandwich"] = {{"min_eta_over_Z", r.sandwich_min}, {"max_eta_over_Z", r.sandwich_max}, {"ok", r.sandwich_ok}};
    j["collisions"] = {{"candidates", r.stats.candidates},
                       {"accepted", r.stats.accepted},
                       {"majorant_retries", r.stats.majorant_retries},
                       {"folds", r.stats.folds}};
    j["warnings"] = r.warnings;
    return j;
}

double family_a_bar(const CollisionKernel& kernel, const DeformationFamily& family, int basis_size, int threads,
                    double& a_hat_out)
{
    const double dir2 = dev_sym(limit_direction(family)).squaredNorm();
    a_hat_out = a_hat(kernel, basis_size, threads);
    return a_hat_out * dir2;
}

RunOutcome run_abar(const ScenarioConfig& c, int threads)
{
    AssemblyOptions ao = c.abar.assembly;
    ao.threads = threads;
    const Mat3 A = limit_direction(c.family);
    if (dev_sym(A).squaredNorm() == 0.0)
        throw ConfigError("'family' has no trace-free limiting deformation, so a_bar is zero by definition");
    GalerkinSystem sys = compute_a_bar(c.kernel, A, c.abar.N, ao);

    Json j;
    j["gamma"] = c.kernel.gamma();
    j["kernel"] = c.kernel.describe();
    j["family"] = c.family.name();
    j["N"] = c.abar.N;
    j["method"] = ao.method == AssemblyMethod::Quadrature ? "quadrature" : "monte_carlo";
    j["samples"] = sys.samples;
    j["a_bar"] = sys.a_bar;
    j["std_err"] = sys.a_bar_std_err;
    j["eigen_min"] = sys.eigen_min;
    j["a_hat"] = sys.a_bar / dev_sym(A).squaredNorm();
    if (c.abar.extrapolate_eps)
    {
        if (c.kernel.is_cutoff() || c.kernel.grazing_eps() <= 0.0)
            throw ConfigError("'abar.extrapolate_eps' needs a non-cutoff kernel with grazing_eps > 0");
        // a_bar(eps) = a_bar(0) + C eps^(2-2s) for small eps.
        const double r = c.abar.eps_ratio;
        const double p = 2.0 - 2.0 * c.kernel.angular().s;
        const GalerkinSystem fine = compute_a_bar(c.kernel.with_grazing_eps(r * c.kernel.grazing_eps()), A,
                                                  c.abar.N, ao);
        const double rp = std::pow(r, p);
        const double extrapolated = (fine.a_bar - rp * sys.a_bar) / (1.0 - rp);
        j["extrapolation"] = {{"order", p},
                              {"eps", {c.kernel.grazing_eps(), r * c.kernel.grazing_eps()}},
                              {"a_bar_at_eps", {sys.a_bar, fine.a_bar}},
                              {"a_bar_eps_to_zero", extrapolated},
                              {"correction", extrapolated - fine.a_bar}};
    }
    j["warnings"] = sys.warnings;
    j["seed"] = c.abar.assembly.seed;
    j["config"] = resolved_config(c);
    return {0, j};
}

RunOutcome run_simulate(const ScenarioConfig& c, int threads, std::ostream& err)
{
    SimulationConfig sim = c.simulation;
    Json summary;
    summary["config"] = resolved_config(c);
    if (sim.a_bar <= 0.0 && dev_sym(limit_direction(sim.family)).squaredNorm() > 0.0)
    {
        double ah = 0.0;
        sim.a_bar = family_a_bar(sim.kernel, sim.family, sim.basis_size, threads, ah);
    }
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);

    const std::vector<SimulationRecord> reps = run_replicas(sim, c.replicas, threads);
    bool complete = true;
    Json replicas = Json::array();
    for (std::size_t r = 0; r < reps.size(); ++r)
    {
        std::ostringstream csv;
        write_csv(reps[r], csv);
        write_text(dir / ("replica_" + std::to_string(r) + ".csv"), csv.str());
        replicas.push_back(record_json(reps[r]));
        complete = complete && !reps[r].incomplete;
        if (reps[r].incomplete)
            err << "replica " << r << " stopped early: " << reps[r].error << "\n";
    }
    const SimulationRecord& first = reps.front();
    summary["a_bar"] = first.a_bar;
    summary["a_hat"] = first.a_hat;
    if (first.predicted.exponent > 0)
        summary["predicted"] = {{"exponent", first.predicted.exponent},
                                {"constant", first.predicted.constant},
                                {"r_integral", first.r_integral}};
    summary["replicas"] = replicas;
    if (reps.size() > 1)
    {
        const SimulationRecord avg = replica_average(reps, sim);
        std::ostringstream csv;
        write_csv(avg, csv);
        write_text(dir / "replica_mean.csv", csv.str());
        Json mean = record_json(avg);
        mean.erase("seed");
        mean.erase("collisions");
        summary["replica_mean"] = mean;
    }
    summary["complete"] = complete;
    write_json(dir / "summary.json", summary);
    return {complete ? 0 : 3, summary};
}

RunOutcome run_asymptotics(const ScenarioConfig& c, int threads)
{
    const AsymptoticsSettings& s = c.asymptotics;
    const double gamma = c.kernel.gamma();
    double a_bar = s.a_bar, ah = 0.0;
    const double dir2 = dev_sym(limit_direction(c.family)).squaredNorm();
    if (a_bar <= 0.0)
        a_bar = dir2 > 0.0 ? family_a_bar(c.kernel, c.family, s.basis_size, threads, ah) : 0.0;
    else
        ah = dir2 > 0.0 ? a_bar / dir2 : 0.0;
    const ReducedModel model = model_from_family(c.family, gamma, a_bar, s.beta0, s.a_mode, ah);

    std::vector<double> times;
    for (int k = 0; k <= s.points; ++k)
        times.push_back(s.t_end * k / s.points);
    const BetaSeries series = integrate_beta(model, times);

    std::optional<PredictedLimit> predicted;
    double r_int = 0.0;
    if (c.family.mode != FamilyMode::ExactFromL0)
    {
        if (c.family.mode == FamilyMode::DecayingDilatation && !c.family.idealized())
            r_int = r_integral_closed_form(c.family);
        predicted = predicted_limit(c.family, gamma, a_bar, r_int);
    }

    std::ostringstream csv;
    csv << "t,beta_inv_gamma_half,Z,eta,predicted_curve\n";
    char buf[160];
    for (std::size_t i = 0; i < times.size(); ++i)
    {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,", series.t[i], series.y[i], series.Z[i],
                      series.eta[i]);
        csv << buf;
        if (predicted)
        {
            std::snprintf(buf, sizeof buf, "%.17g", predicted->constant * std::pow(series.t[i], predicted->exponent));
            csv << buf;
        }
        csv << '\n';
    }

    Json j;
    j["config"] = resolved_config(c);
    j["a_bar"] = a_bar;
    j["a_mode"] = s.a_mode == AMode::Exact ? "exact" : "frozen";
    if (predicted)
    {
        j["predicted"] = {{"exponent", predicted->exponent}, {"constant", predicted->constant}, {"r_integral", r_int}};
        const auto window = default_fit_window(s.t_end);
        try
        {
            j["fit"] = fit_json(fit_power_law(series.t, series.y, window.first, window.second));
        }
        catch (const NumericalError& e)
        {
            j["fit_unavailable"] = e.what();
        }
    }
    j["final"] = {{"t", series.t.back()}, {"beta_inv_gamma_half", series.y.back()}, {"Z", series.Z.back()},
                  {"eta", series.eta.back()}};

    if (c.family.mode != FamilyMode::ExactFromL0)
    {
        std::vector<double> grid;
        for (int k = 0; k <= 60; ++k)
            grid.push_back(std::pow(10.0, k / 20.0));
        DeformationFamily wide = c.family;
        wide.horizon = std::max(wide.horizon, 2e3);
        const GrowthReport g = check_growth_assumption(assumption_model(wide, gamma, a_bar), grid);
        j["growth_assumption"] = {{"pass", g.pass},         {"ratio_min", g.ratio_min}, {"ratio_max", g.ratio_max},
                                  {"z_slope", g.z_slope},   {"n_slope", g.n_slope},     {"detail", g.detail}};
    }
    const fs::path dir(c.output_dir);
    fs::create_directories(dir);
    write_text(dir / "asymptotics.csv", csv.str());
    write_json(dir / "summary.json", j);
    return {0, j};
}

int error_code(const std::exception_ptr& e, std::ostream& err)
{
    try
    {
        std::rethrow_exception(e);
    }
    catch (const Error& x)
    {
        err << "error: " << x.what() << "\n";
        return static_cast<int>(x.family());
    }
    catch (const std::filesystem::filesystem_error& x)
    {
        err << "error: " << x.what() << "\n";
        return 2;
    }
    catch (const std::exception& x)
    {
        err << "error: " << x.what() << "\n";
        return 3;
    }
}

Json metadata(const std::string& started, double elapsed, int threads, const ScenarioConfig& c)
{
    Json m;
    m["started_utc"] = started;
    m["finished_utc"] = utc_now();
    m["elapsed_seconds"] = elapsed;
    m["threads"] = threads;
    m["seed_drawn"] = c.seed_drawn;
    if (!c.kernel.is_cutoff())
        m["notes"] = {"non-cutoff angular law realised with grazing cutoff eps = " +
                      std::to_string(c.kernel.grazing_eps()) +
                      "; fitted exponents are insensitive to eps, constants depend on it mildly"};
    return m;
}

RunOutcome dispatch(const ScenarioConfig& c, int threads, std::ostream& err)
{
    switch (c.mode)
    {
    case Mode::Abar:
        return run_abar(c, threads);
    case Mode::Simulate:
        return run_simulate(c, threads, err);
    case Mode::Asymptotics:
        return run_asymptotics(c, threads);
    case Mode::Validate:
        break;
    }
    throw ConfigError("mode validate has no config-driven form; use the validate subcommand");
}

Json key_results(const Json& summary)
{
    Json k;
    for (const char* key : {"a_bar", "std_err", "predicted", "fit", "replica_mean", "complete"})
        if (summary.contains(key))
            k[key] = summary[key];
    return k;
}

int run_sweep(const Json& doc, const ScenarioConfig& base, int threads, std::ostream& out, std::ostream& err)
{
    const SweepSettings& sw = *base.sweep;
    Json stripped = doc;
    stripped.erase("sweep");
    // Parse every point first so a bad value fails before any work starts.
    std::vector<ScenarioConfig> points;
    for (std::size_t i = 0; i < sw.values.size(); ++i)
    {
        Json d = with_value(stripped, sw.path, sw.values[i]);
        d = with_value(d, "run.output_dir", (fs::path(base.output_dir) / ("sweep_" + std::to_string(i))).string());
        d = with_value(d, "run.seed", base.simulation.seed);
        try
        {
            points.push_back(parse_config(d));
        }
        catch (const ConfigError& e)
        {
            throw ConfigError("sweep value " + std::to_string(i) + ": " + e.what());
        }
    }

    std::vector<RunOutcome> outcomes(points.size());
    std::vector<std::string> logs(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++)
        {
            std::ostringstream log;
            try
            {
                fs::create_directories(points[i].output_dir);
                outcomes[i] = dispatch(points[i], 1, log);
                if (points[i].mode == Mode::Abar)
                    write_json(fs::path(points[i].output_dir) / "summary.json", outcomes[i].summary);
            }
            catch (...)
            {
                outcomes[i].code = error_code(std::current_exception(), log);
            }
            logs[i] = log.str();
        }
    };
    const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < n_workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();

    Json index = Json::array();
    int code = 0;
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        err << logs[i];
        index.push_back({{"index", i},
                         {"path", sw.path},
                         {"value", sw.values[i]},
                         {"output_dir", points[i].output_dir},
                         {"exit_code", outcomes[i].code},
                         {"result", key_results(outcomes[i].summary)}});
        if (code == 0)
            code = outcomes[i].code;
    }
    fs::create_directories(base.output_dir);
    write_json(fs::path(base.output_dir) / "sweep_index.json", index);
    out << index.dump(2) << "\n";
    return code;
}

Json load_document(const std::string& path)
{
    if (path.empty())
        return Json::object();
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    try
    {
        return Json::parse(in);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

Json apply_abar_flags(Json doc, const AbarFlags& f)
{
    auto set = [&](const char* key, const auto& v) {
        if (v)
            doc = with_value(doc, key, *v);
    };
    set("kernel.gamma", f.gamma);
    set("kernel.angular.type", f.angular);
    set("kernel.angular.s", f.s);
    set("kernel.angular.Kb", f.Kb);
    set("kernel.angular.b0", f.b0);
    set("kernel.grazing_eps", f.eps);
    set("family.type", f.family);
    set("family.K", f.K);
    set("family.K1", f.K1);
    set("family.K2", f.K2);
    set("family.K3", f.K3);
    set("family.dilatation_rate", f.lambda);
    set("abar.N", f.N);
    set("abar.method", f.method);
    set("abar.samples", f.samples);
    if (f.extrapolate)
        doc = with_value(doc, "abar.extrapolate_eps", true);
    // A bare --s or --Kb implies the non-cutoff law.
    if ((f.s || f.Kb) && !f.angular)
        doc = with_value(doc, "kernel.angular.type", "noncutoff");
    return doc;
}

void add_common(CLI::App* app, CommonFlags& flags, bool config_and_out)
{
    if (config_and_out)
    {
        app->add_option("--config", flags.config, "JSON scenario file");
        app->add_option("--out", flags.out, "output directory");
    }
    app->add_option("--seed", flags.seed, "base seed (drawn and recorded when omitted)");
    app->add_option("--threads", flags.threads, "worker threads (default: HOMOEN_THREADS or 1)")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Homoenergetic Boltzmann toolkit for hard potentials", "homoen"};
    app.require_subcommand(1);
    CommonFlags flags;
    AbarFlags abar;

    CLI::App* abar_cmd = app.add_subcommand("abar", "transport coefficient a_bar of the linearized operator");
    add_common(abar_cmd, flags, true);
    abar_cmd->add_option("--gamma", abar.gamma, "kinetic exponent");
    abar_cmd->add_option("--angular", abar.angular, "cutoff, noncutoff or hard_sphere_like");
    abar_cmd->add_option("--s", abar.s, "angular singularity order (non-cutoff)");
    abar_cmd->add_option("--Kb", abar.Kb, "angular prefactor (non-cutoff)");
    abar_cmd->add_option("--b0", abar.b0, "angular constant (cutoff)");
    abar_cmd->add_option("--eps", abar.eps, "grazing cutoff angle");
    abar_cmd->add_option("--family", abar.family, "simple_shear, combined_shear, decaying_dilatation or exact");
    abar_cmd->add_option("--K", abar.K, "simple-shear rate");
    abar_cmd->add_option("--K1", abar.K1);
    abar_cmd->add_option("--K2", abar.K2);
    abar_cmd->add_option("--K3", abar.K3);
    abar_cmd->add_option("--lambda", abar.lambda, "dilatation rate");
    abar_cmd->add_option("--N", abar.N, "basis size");
    abar_cmd->add_option("--method", abar.method, "quadrature or monte_carlo");
    abar_cmd->add_option("--samples", abar.samples, "Monte Carlo samples");
    abar_cmd->add_flag("--extrapolate-eps", abar.extrapolate, "Richardson extrapolation in the grazing cutoff");

    CLI::App* sim_cmd = app.add_subcommand("simulate", "particle simulation of a homoenergetic flow");
    add_common(sim_cmd, flags, true);
    CLI::App* asy_cmd = app.add_subcommand("asymptotics", "reduced inverse-temperature model and predictions");
    add_common(asy_cmd, flags, true);
    CLI::App* val_cmd = app.add_subcommand("validate", "invariant suite and oracle cross-checks");
    add_common(val_cmd, flags, false);
    val_cmd->add_option("--out", flags.out, "directory for validation.json");
    val_cmd->add_flag("--quick", flags.quick, "reduced sizes");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try
    {
        app.parse(reversed);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const int threads = flags.threads ? *flags.threads : default_threads();
    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    try
    {
        if (val_cmd->parsed())
        {
            ValidationOptions vo;
            vo.quick = flags.quick;
            vo.threads = threads;
            if (flags.seed)
                vo.seed = *flags.seed;
            const std::vector<CheckResult> results = run_validation(vo, out);
            const long failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.pass; });
            out << (failed == 0 ? "validation passed" : "validation failed") << ": " << results.size() - failed
                << "/" << results.size() << " checks\n";
            if (!flags.out.empty())
            {
                Json j = Json::array();
                for (const auto& r : results)
                    j.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
                fs::create_directories(flags.out);
                write_json(fs::path(flags.out) / "validation.json", j);
            }
            return failed == 0 ? 0 : 4;
        }

        Json doc = load_document(flags.config);
        if (!doc.is_object())
            throw ConfigError("config root must be a JSON object");
        const Mode mode = abar_cmd->parsed() ? Mode::Abar : sim_cmd->parsed() ? Mode::Simulate : Mode::Asymptotics;
        doc["mode"] = mode_name(mode);
        if (mode == Mode::Abar)
            doc = apply_abar_flags(doc, abar);
        if (flags.seed)
        {
            doc = with_value(doc, "run.seed", *flags.seed);
            if (mode == Mode::Abar)
                doc = with_value(doc, "abar.seed", *flags.seed);
        }
        if (!flags.out.empty())
            doc = with_value(doc, "run.output_dir", flags.out);
        const ScenarioConfig config = parse_config(doc);

        if (config.sweep)
            return run_sweep(doc, config, threads, out, err);

        const RunOutcome result = dispatch(config, threads, err);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (mode == Mode::Abar)
        {
            out << result.summary.dump(2) << "\n";
            if (!flags.out.empty())
            {
                fs::create_directories(config.output_dir);
                write_json(fs::path(config.output_dir) / "summary.json", result.summary);
            }
        }
        else
        {
            Json brief = key_results(result.summary);
            brief["output_dir"] = config.output_dir;
            out << brief.dump(2) << "\n";
        }
        if (mode != Mode::Abar || !flags.out.empty())
            write_json(fs::path(config.output_dir) / "metadata.json", metadata(started, elapsed, threads, config));
        return result.code;
    }
    catch (...)
    {
        return error_code(std::current_exception(), err);
    }
}

int run_cli(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace homoenergetic
