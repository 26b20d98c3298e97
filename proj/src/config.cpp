#include "homoenergetic/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "homoenergetic/errors.hpp"
#include "homoenergetic/rng.hpp"

namespace homoenergetic {

namespace {

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

// Reads keys of one JSON object and rejects any key that was never asked for.
class ObjectReader
{
  public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError("'" + (path_.empty() ? std::string("<root>") : path_) + "' must be a JSON object");
    }

    bool has(const std::string& key)
    {
        used_.insert(key);
        return j_.contains(key);
    }

    double number(const std::string& key, double fallback)
    {
        if (!has(key))
            return fallback;
        const Json& v = j_.at(key);
        if (!v.is_number())
            throw ConfigError("'" + join(path_, key) + "' must be a number");
        return v.get<double>();
    }

    long long integer(const std::string& key, long long fallback)
    {
        if (!has(key))
            return fallback;
        const Json& v = j_.at(key);
        if (!v.is_number_integer())
            throw ConfigError("'" + join(path_, key) + "' must be an integer");
        return v.get<long long>();
    }

    std::optional<std::uint64_t> seed(const std::string& key)
    {
        if (!has(key))
            return std::nullopt;
        const Json& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ConfigError("'" + join(path_, key) + "' must be a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        if (!has(key))
            return fallback;
        const Json& v = j_.at(key);
        if (!v.is_string())
            throw ConfigError("'" + join(path_, key) + "' must be a string");
        return v.get<std::string>();
    }

    bool boolean(const std::string& key, bool fallback)
    {
        if (!has(key))
            return fallback;
        const Json& v = j_.at(key);
        if (!v.is_boolean())
            throw ConfigError("'" + join(path_, key) + "' must be true or false");
        return v.get<bool>();
    }

    Mat3 matrix(const std::string& key, const Mat3& fallback)
    {
        if (!has(key))
            return fallback;
        const Json& v = j_.at(key);
        const std::string where = join(path_, key);
        if (!v.is_array() || v.size() != 3)
            throw ConfigError("'" + where + "' must be a 3x3 array");
        Mat3 M;
        for (int i = 0; i < 3; ++i)
        {
            if (!v[i].is_array() || v[i].size() != 3)
                throw ConfigError("'" + where + "' must be a 3x3 array");
            for (int k = 0; k < 3; ++k)
            {
                if (!v[i][k].is_number())
                    throw ConfigError("'" + where + "' entries must be numbers");
                M(i, k) = v[i][k].get<double>();
            }
        }
        return M;
    }

    const Json* child(const std::string& key)
    {
        if (!has(key))
            return nullptr;
        return &j_.at(key);
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError("unknown key '" + join(path_, it.key()) + "'");
    }

  private:
    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw ConfigError(message);
}

Json matrix_json(const Mat3& M)
{
    Json a = Json::array();
    for (int i = 0; i < 3; ++i)
        a.push_back({M(i, 0), M(i, 1), M(i, 2)});
    return a;
}

Mode parse_mode(const std::string& s, const std::string& where)
{
    if (s == "abar")
        return Mode::Abar;
    if (s == "simulate")
        return Mode::Simulate;
    if (s == "asymptotics")
        return Mode::Asymptotics;
    if (s == "validate")
        return Mode::Validate;
    throw ConfigError("'" + where + "' must be one of abar, simulate, asymptotics, validate");
}

}  // namespace

std::string mode_name(Mode mode)
{
    switch (mode)
    {
    case Mode::Abar:
        return "abar";
    case Mode::Simulate:
        return "simulate";
    case Mode::Asymptotics:
        return "asymptotics";
    case Mode::Validate:
        return "validate";
    }
    return "unknown";
}

CollisionKernel kernel_from_json(const Json& j, const std::string& path)
{
    ObjectReader r(j, path);
    const double gamma = r.number("gamma", 0.5);
    const double eps = r.number("grazing_eps", 0.02);
    std::string type = "cutoff";
    double s = 0.25, Kb = 1.0, b0 = unit_mass_b0();
    if (const Json* a = r.child("angular"))
    {
        ObjectReader ar(*a, r.path("angular"));
        type = ar.string("type", "cutoff");
        if (type == "noncutoff")
        {
            s = ar.number("s", 0.25);
            Kb = ar.number("Kb", 1.0);
        }
        else if (type == "cutoff" || type == "hard_sphere_like")
            b0 = ar.number("b0", unit_mass_b0());
        else
            throw ConfigError("'" + ar.path("type") + "' must be cutoff, noncutoff or hard_sphere_like");
        ar.finish();
    }
    r.finish();
    require(gamma >= 0.0 && gamma <= 1.0, "'" + join(path, "gamma") + "' must lie in [0, 1]");
    require(eps >= 0.0 && eps < M_PI / 2.0, "'" + join(path, "grazing_eps") + "' must lie in [0, pi/2)");
    if (type == "noncutoff")
    {
        require(gamma > 0.0 && gamma < 1.0, "non-cutoff kernels need gamma in (0, 1)");
        require(s > 0.0 && s < 0.5, "'" + join(path, "angular.s") + "' must lie in (0, 1/2)");
        require(Kb > 0.0, "'" + join(path, "angular.Kb") + "' must be positive");
        return CollisionKernel::non_cutoff(gamma, s, Kb, eps);
    }
    require(b0 > 0.0, "'" + join(path, "angular.b0") + "' must be positive");
    if (type == "hard_sphere_like")
        return CollisionKernel::hard_sphere_like(gamma, b0);
    return CollisionKernel::constant_cutoff(gamma, b0);
}

Json kernel_to_json(const CollisionKernel& k)
{
    Json j;
    j["gamma"] = k.gamma();
    Json a;
    switch (k.angular().type)
    {
    case AngularType::NonCutoffPowerLaw:
        a["type"] = "noncutoff";
        a["s"] = k.angular().s;
        a["Kb"] = k.angular().K_b;
        break;
    case AngularType::ConstantCutoff:
        a["type"] = "cutoff";
        a["b0"] = k.angular().b0;
        break;
    case AngularType::HardSphereLike:
        a["type"] = "hard_sphere_like";
        a["b0"] = k.angular().b0;
        break;
    }
    j["angular"] = a;
    j["grazing_eps"] = k.grazing_eps();
    return j;
}

DeformationFamily family_from_json(const Json& j, const std::string& path)
{
    ObjectReader r(j, path);
    const std::string type = r.string("type", "simple_shear");
    const double horizon = r.number("horizon", 1000.0);
    DeformationFamily f;
    if (type == "simple_shear")
        f = DeformationFamily::simple_shear(r.number("K", 1.0), horizon);
    else if (type == "combined_shear")
        f = DeformationFamily::combined_shear(r.number("K1", 1.0), r.number("K2", 0.0), r.number("K3", 1.0),
                                              horizon);
    else if (type == "decaying_dilatation")
        f = DeformationFamily::decaying_dilatation(r.number("K1", 0.0), r.number("K2", 1.0), r.number("K3", 0.0),
                                                   r.number("dilatation_rate", 1.0), horizon);
    else if (type == "zero")
        f = DeformationFamily::zero(horizon);
    else if (type == "exact")
    {
        require(r.has("L0"), "'" + r.path("L0") + "' is required for type exact");
        f = DeformationFamily::exact(r.matrix("L0", Mat3::Zero()), horizon);
    }
    else
        throw ConfigError("'" + r.path("type") +
                          "' must be simple_shear, combined_shear, decaying_dilatation, zero or exact");
    r.finish();
    f.validate();
    return f;
}

Json family_to_json(const DeformationFamily& f)
{
    Json j;
    switch (f.mode)
    {
    case FamilyMode::SimpleShear:
        j["type"] = "simple_shear";
        j["K"] = f.K;
        break;
    case FamilyMode::CombinedShear:
        j["type"] = "combined_shear";
        j["K1"] = f.K1;
        j["K2"] = f.K2;
        j["K3"] = f.K3;
        break;
    case FamilyMode::DecayingDilatation:
        j["type"] = "decaying_dilatation";
        j["K1"] = f.K1;
        j["K2"] = f.K2;
        j["K3"] = f.K3;
        j["dilatation_rate"] = f.dilatation_rate;
        break;
    case FamilyMode::ExactFromL0:
        if (f.L0.isZero(0.0))
            j["type"] = "zero";
        else
        {
            j["type"] = "exact";
            j["L0"] = matrix_json(f.L0);
        }
        break;
    }
    j["horizon"] = f.horizon;
    return j;
}

ScenarioConfig parse_config(const Json& doc)
{
    ScenarioConfig c;
    c.source = doc;
    ObjectReader root(doc, "");
    c.mode = parse_mode(root.string("mode", "simulate"), "mode");

    double t_needed = 0.0;
    SimulationConfig& sim = c.simulation;
    if (const Json* run = root.child("run"))
    {
        ObjectReader r(*run, "run");
        const long long N = r.integer("N", static_cast<long long>(sim.N));
        require(N >= 1000, "'run.N' must be at least 1000");
        sim.N = static_cast<std::size_t>(N);
        sim.t_end = r.number("t_end", sim.t_end);
        sim.output_dt = r.number("output_dt", sim.output_dt);
        sim.dt_max = r.number("dt_max", sim.dt_max);
        sim.collision_fraction = r.number("collision_fraction", sim.collision_fraction);
        sim.drift_fraction = r.number("drift_fraction", sim.drift_fraction);
        sim.fold_threshold = r.number("fold_threshold", sim.fold_threshold);
        sim.beta0 = r.number("beta0", sim.beta0);
        sim.a_bar = r.number("a_bar", 0.0);
        sim.basis_size = static_cast<int>(r.integer("basis_size", sim.basis_size));
        c.replicas = static_cast<int>(r.integer("replicas", 1));
        c.output_dir = r.string("output_dir", c.output_dir);
        if (auto s = r.seed("seed"))
            sim.seed = *s;
        else
        {
            sim.seed = draw_seed();
            c.seed_drawn = true;
        }
        if (const Json* init = r.child("initial"))
        {
            ObjectReader ir(*init, "run.initial");
            const std::string type = ir.string("type", "maxwellian");
            if (type == "perturbed")
            {
                sim.initial.kind = InitialKind::PerturbedMaxwellian;
                sim.initial.amplitude = ir.number("amplitude", 0.0);
                Mat3 d = Mat3::Zero();
                d(0, 1) = 1.0;
                sim.initial.direction = ir.matrix("direction", d);
            }
            else if (type != "maxwellian")
                throw ConfigError("'run.initial.type' must be maxwellian or perturbed");
            ir.finish();
        }
        if (const Json* e = r.child("entropy"))
        {
            ObjectReader er(*e, "run.entropy");
            sim.entropy = er.boolean("enabled", true);
            sim.entropy_every = static_cast<int>(er.integer("every", sim.entropy_every));
            sim.entropy_subsample = static_cast<std::size_t>(er.integer("subsample", sim.entropy_subsample));
            sim.entropy_bootstrap = static_cast<int>(er.integer("bootstrap", sim.entropy_bootstrap));
            er.finish();
        }
        if (const Json* w = r.child("fit_window"))
        {
            require(w->is_array() && w->size() == 2 && (*w)[0].is_number() && (*w)[1].is_number(),
                    "'run.fit_window' must be [t_min, t_max]");
            sim.fit_window = std::make_pair((*w)[0].get<double>(), (*w)[1].get<double>());
            require(sim.fit_window->first < sim.fit_window->second, "'run.fit_window' must be increasing");
        }
        r.finish();
        require(sim.t_end > 0.0, "'run.t_end' must be positive");
        require(sim.output_dt > 0.0, "'run.output_dt' must be positive");
        require(sim.dt_max > 0.0, "'run.dt_max' must be positive");
        require(sim.beta0 > 0.0, "'run.beta0' must be positive");
        require(c.replicas >= 1, "'run.replicas' must be at least 1");
        require(sim.basis_size >= 1, "'run.basis_size' must be at least 1");
        t_needed = std::max(t_needed, sim.t_end);
    }
    else
    {
        sim.seed = draw_seed();
        c.seed_drawn = true;
        if (c.mode == Mode::Simulate)
            t_needed = sim.t_end;
    }

    if (const Json* a = root.child("abar"))
    {
        ObjectReader r(*a, "abar");
        c.abar.N = static_cast<int>(r.integer("N", 16));
        const std::string method = r.string("method", "quadrature");
        if (method == "monte_carlo")
            c.abar.assembly.method = AssemblyMethod::MonteCarlo;
        else if (method != "quadrature")
            throw ConfigError("'abar.method' must be quadrature or monte_carlo");
        const long long samples = r.integer("samples", static_cast<long long>(c.abar.assembly.samples));
        require(samples >= 10000, "'abar.samples' must be at least 1e4");
        c.abar.assembly.samples = static_cast<std::uint64_t>(samples);
        if (auto s = r.seed("seed"))
            c.abar.assembly.seed = *s;
        c.abar.extrapolate_eps = r.boolean("extrapolate_eps", false);
        c.abar.eps_ratio = r.number("eps_ratio", 0.5);
        r.finish();
        require(c.abar.N >= 1 && c.abar.N <= 40, "'abar.N' must lie in [1, 40]");
        require(c.abar.eps_ratio > 0.0 && c.abar.eps_ratio < 1.0, "'abar.eps_ratio' must lie in (0, 1)");
    }

    if (const Json* a = root.child("asymptotics"))
    {
        ObjectReader r(*a, "asymptotics");
        AsymptoticsSettings& s = c.asymptotics;
        s.t_end = r.number("t_end", s.t_end);
        s.points = static_cast<int>(r.integer("points", s.points));
        const std::string mode = r.string("a_mode", "frozen");
        if (mode == "exact")
            s.a_mode = AMode::Exact;
        else if (mode != "frozen")
            throw ConfigError("'asymptotics.a_mode' must be frozen or exact");
        s.beta0 = r.number("beta0", s.beta0);
        s.a_bar = r.number("a_bar", 0.0);
        s.basis_size = static_cast<int>(r.integer("basis_size", s.basis_size));
        r.finish();
        require(s.t_end > 0.0, "'asymptotics.t_end' must be positive");
        require(s.points >= 2, "'asymptotics.points' must be at least 2");
        require(s.beta0 > 0.0, "'asymptotics.beta0' must be positive");
        if (c.mode == Mode::Asymptotics)
            t_needed = std::max(t_needed, s.t_end);
    }

    if (const Json* k = root.child("kernel"))
        c.kernel = kernel_from_json(*k, "kernel");
    if (const Json* f = root.child("family"))
    {
        Json fam = *f;
        if (!fam.contains("horizon") && fam.is_object())
            fam["horizon"] = std::max(1000.0, t_needed);
        c.family = family_from_json(fam, "family");
        require(c.family.horizon >= t_needed, "'family.horizon' is shorter than the requested time span");
    }
    else
        c.family.horizon = std::max(1000.0, t_needed);

    if (const Json* s = root.child("sweep"))
    {
        ObjectReader r(*s, "sweep");
        SweepSettings sw;
        sw.path = r.string("path", "");
        require(!sw.path.empty(), "'sweep.path' is required");
        const Json* values = r.child("values");
        require(values && values->is_array() && !values->empty(), "'sweep.values' must be a non-empty array");
        for (const auto& v : *values)
            sw.values.push_back(v);
        r.finish();
        c.sweep = sw;
    }
    root.finish();

    if (c.mode == Mode::Simulate || c.mode == Mode::Asymptotics)
        require(c.kernel.gamma() > 0.0, "'kernel.gamma' must be positive here (gamma = 0 is a validation surrogate)");
    if (c.mode == Mode::Simulate)
    {
        require(c.kernel.is_cutoff() || c.kernel.grazing_eps() > 0.0,
                "simulating a non-cutoff law needs 'kernel.grazing_eps' > 0");
    }
    sim.kernel = c.kernel;
    sim.family = c.family;
    return c;
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    Json doc;
    try
    {
        doc = Json::parse(in);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

Json resolved_config(const ScenarioConfig& c)
{
    const SimulationConfig& s = c.simulation;
    Json j;
    j["mode"] = mode_name(c.mode);
    j["kernel"] = kernel_to_json(c.kernel);
    j["family"] = family_to_json(c.family);
    Json run;
    run["N"] = s.N;
    run["t_end"] = s.t_end;
    run["output_dt"] = s.output_dt;
    run["dt_max"] = s.dt_max;
    run["collision_fraction"] = s.collision_fraction;
    run["drift_fraction"] = s.drift_fraction;
    run["fold_threshold"] = s.fold_threshold;
    run["beta0"] = s.beta0;
    run["a_bar"] = s.a_bar;
    run["basis_size"] = s.basis_size;
    run["replicas"] = c.replicas;
    run["seed"] = s.seed;
    run["output_dir"] = c.output_dir;
    Json init;
    init["type"] = s.initial.kind == InitialKind::Maxwellian ? "maxwellian" : "perturbed";
    if (s.initial.kind == InitialKind::PerturbedMaxwellian)
    {
        init["amplitude"] = s.initial.amplitude;
        init["direction"] = matrix_json(s.initial.direction);
    }
    run["initial"] = init;
    run["entropy"] = {{"enabled", s.entropy},
                      {"every", s.entropy_every},
                      {"subsample", s.entropy_subsample},
                      {"bootstrap", s.entropy_bootstrap}};
    const auto window = s.fit_window ? *s.fit_window : default_fit_window(s.t_end);
    run["fit_window"] = {window.first, window.second};
    j["run"] = run;
    j["abar"] = {{"N", c.abar.N},
                 {"method", c.abar.assembly.method == AssemblyMethod::Quadrature ? "quadrature" : "monte_carlo"},
                 {"samples", c.abar.assembly.samples},
                 {"seed", c.abar.assembly.seed},
                 {"extrapolate_eps", c.abar.extrapolate_eps},
                 {"eps_ratio", c.abar.eps_ratio}};
    j["asymptotics"] = {{"t_end", c.asymptotics.t_end},
                        {"points", c.asymptotics.points},
                        {"a_mode", c.asymptotics.a_mode == AMode::Exact ? "exact" : "frozen"},
                        {"beta0", c.asymptotics.beta0},
                        {"a_bar", c.asymptotics.a_bar},
                        {"basis_size", c.asymptotics.basis_size}};
    if (c.sweep)
        j["sweep"] = {{"path", c.sweep->path}, {"values", c.sweep->values}};
    return j;
}

Json with_value(const Json& doc, const std::string& dotted_path, const Json& value)
{
    Json out = doc;
    Json* node = &out;
    std::stringstream ss(dotted_path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.'))
        parts.push_back(part);
    if (parts.empty())
        throw ConfigError("empty sweep path");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
    {
        if (!node->contains(parts[i]))
            (*node)[parts[i]] = Json::object();
        node = &(*node)[parts[i]];
        if (!node->is_object())
            throw ConfigError("sweep path '" + dotted_path + "' crosses a non-object value");
    }
    (*node)[parts.back()] = value;
    return out;
}

}  // namespace homoenergetic
