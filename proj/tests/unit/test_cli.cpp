#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "homoenergetic/cli.hpp"
#include "homoenergetic/config.hpp"
#include "homoenergetic/errors.hpp"

using namespace homoenergetic;
namespace fs = std::filesystem;

namespace {

struct Scratch
{
    fs::path dir;
    Scratch() : dir(fs::temp_directory_path() / ("homoen_cli_" + std::to_string(::getpid())))
    {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }

    std::string file(const std::string& name, const std::string& text) const
    {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::vector<std::string>& args, std::string& out, std::string& err)
{
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    out = o.str();
    err = e.str();
    return code;
}

}  // namespace

TEST_CASE("config parsing fills defaults and records drawn seeds")
{
    const ScenarioConfig c = parse_config(Json::parse(R"({"mode": "simulate"})"));
    CHECK(c.mode == Mode::Simulate);
    CHECK(c.seed_drawn);
    CHECK(c.kernel.gamma() == 0.5);
    CHECK(c.simulation.N == 200000u);
    const Json resolved = resolved_config(c);
    CHECK(resolved["run"]["seed"].get<std::uint64_t>() == c.simulation.seed);

    // The resolved form parses back to itself.
    const ScenarioConfig again = parse_config(resolved);
    CHECK_FALSE(again.seed_drawn);
    CHECK(resolved_config(again).dump() == resolved.dump());
}

TEST_CASE("unknown keys are named with their path")
{
    try
    {
        parse_config(Json::parse(R"({"run": {"N": 5000, "initial": {"type": "maxwellian", "tmp": 3}}})"));
        FAIL("expected a configuration error");
    }
    catch (const ConfigError& e)
    {
        CHECK(std::string(e.what()).find("run.initial.tmp") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"extra": 1})")), ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"run": {"N": "many"}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"kernel": {"angular": {"type": "cutoff", "s": 0.2}}})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"run": {"t_end": 2000}, "family": {"horizon": 100}})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"kernel": {"gamma": 0.0}})")), ConfigError);
}

TEST_CASE("kernel and family round trip through JSON")
{
    const auto k = CollisionKernel::non_cutoff(0.3, 0.2, 2.0, 0.05);
    const auto k2 = kernel_from_json(kernel_to_json(k));
    CHECK(k2.describe() == k.describe());

    const auto f = DeformationFamily::decaying_dilatation(0.5, 1.0, 0.25, 2.0, 500.0);
    const auto f2 = family_from_json(family_to_json(f));
    CHECK((f2.L0 - f.L0).norm() == 0.0);
    CHECK(f2.horizon == 500.0);

    Mat3 L0 = Mat3::Zero();
    L0(0, 1) = 0.5;
    L0(2, 2) = 1.0;
    const auto e = family_from_json(family_to_json(DeformationFamily::exact(L0)));
    CHECK((e.L0 - L0).norm() == 0.0);
}

TEST_CASE("dotted-path updates")
{
    const Json doc = Json::parse(R"({"kernel": {"gamma": 0.5}})");
    const Json d = with_value(doc, "kernel.angular.type", "noncutoff");
    CHECK(d["kernel"]["angular"]["type"] == "noncutoff");
    CHECK(d["kernel"]["gamma"] == 0.5);
    CHECK(doc["kernel"].size() == 1u);
    CHECK_THROWS_AS(with_value(doc, "kernel.gamma.x", 1), ConfigError);
}

TEST_CASE("abar subcommand prints JSON with a positive a_bar")
{
    std::string out, err;
    REQUIRE(run({"abar", "--gamma", "0.5", "--family", "simple_shear", "--K", "1", "--N", "4"}, out, err) == 0);
    const Json j = Json::parse(out);
    CHECK(j["a_bar"].get<double>() > 0.0);
    CHECK(j["a_bar"].get<double>() == doctest::Approx(1.0668137).epsilon(1e-6));
    CHECK(j["gamma"] == 0.5);
    CHECK(j.contains("std_err"));
    CHECK(j.contains("config"));
}

TEST_CASE("exit codes")
{
    Scratch s;
    std::string out, err;
    const std::string bad = s.file("bad.json", R"({"kernel": {"gamma": 0.5, "bogus": 1}})");
    CHECK(run({"simulate", "--config", bad}, out, err) == 2);
    CHECK(err.find("kernel.bogus") != std::string::npos);

    CHECK(run({"simulate", "--config", s.file("broken.json", "{ not json")}, out, err) == 2);
    CHECK(run({"simulate", "--config", (s.dir / "missing.json").string()}, out, err) == 2);
    CHECK(run({"frobnicate"}, out, err) == 2);
    CHECK(run({"--help"}, out, err) == 0);
    CHECK(run({"abar", "--family", "zero"}, out, err) == 2);
}

TEST_CASE("simulate writes deterministic data and separate metadata")
{
    Scratch s;
    const std::string cfg = s.file("s.json", R"({
        "kernel": {"gamma": 0.5},
        "family": {"type": "simple_shear", "K": 1.0},
        "run": {"N": 2000, "t_end": 1.0, "output_dt": 0.25, "seed": 11, "a_bar": 1.0668, "replicas": 2}
    })");
    std::string out, err;
    const std::string a = (s.dir / "a").string(), b = (s.dir / "b").string();
    REQUIRE(run({"simulate", "--config", cfg, "--out", a, "--threads", "2"}, out, err) == 0);
    REQUIRE(run({"simulate", "--config", cfg, "--out", b}, out, err) == 0);
    for (const char* f : {"replica_0.csv", "replica_1.csv", "replica_mean.csv"})
    {
        CHECK(fs::exists(fs::path(a) / f));
        CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
    }
    // Summaries differ only in the output directory they echo.
    Json sa = Json::parse(slurp(fs::path(a) / "summary.json"));
    Json sb = Json::parse(slurp(fs::path(b) / "summary.json"));
    CHECK(sa["config"]["run"]["seed"] == 11);
    sa["config"]["run"].erase("output_dir");
    sb["config"]["run"].erase("output_dir");
    CHECK(sa.dump() == sb.dump());
    const Json meta = Json::parse(slurp(fs::path(a) / "metadata.json"));
    CHECK(meta["threads"] == 2);
    CHECK(meta.contains("started_utc"));
}

TEST_CASE("thread count from the environment, overridden by the flag")
{
    Scratch s;
    const std::string cfg = s.file("a.json", R"({"asymptotics": {"t_end": 50, "points": 100, "a_bar": 1.0}})");
    std::string out, err;
    ::setenv("HOMOEN_THREADS", "3", 1);
    REQUIRE(run({"asymptotics", "--config", cfg, "--out", (s.dir / "x").string()}, out, err) == 0);
    CHECK(Json::parse(slurp(s.dir / "x" / "metadata.json"))["threads"] == 3);
    REQUIRE(run({"asymptotics", "--config", cfg, "--out", (s.dir / "y").string(), "--threads", "1"}, out, err) == 0);
    CHECK(Json::parse(slurp(s.dir / "y" / "metadata.json"))["threads"] == 1);
    ::unsetenv("HOMOEN_THREADS");

    const std::string csv = slurp(s.dir / "x" / "asymptotics.csv");
    CHECK(csv.rfind("t,beta_inv_gamma_half,Z,eta,predicted_curve\n", 0) == 0);
    const Json sum = Json::parse(slurp(s.dir / "x" / "summary.json"));
    CHECK(sum["predicted"]["exponent"] == 1);
    CHECK(sum["growth_assumption"]["pass"] == true);
}

TEST_CASE("sweeps write one directory per value and an index")
{
    Scratch s;
    const std::string cfg = s.file("sw.json", R"({
        "kernel": {"gamma": 0.5},
        "asymptotics": {"t_end": 20, "points": 40, "a_bar": 1.0},
        "sweep": {"path": "asymptotics.beta0", "values": [0.001, 0.01, 0.1]}
    })");
    std::string out, err;
    REQUIRE(run({"asymptotics", "--config", cfg, "--out", s.dir.string(), "--threads", "2"}, out, err) == 0);
    const Json index = Json::parse(slurp(s.dir / "sweep_index.json"));
    REQUIRE(index.size() == 3u);
    for (int i = 0; i < 3; ++i)
    {
        CHECK(index[i]["exit_code"] == 0);
        CHECK(fs::exists(s.dir / ("sweep_" + std::to_string(i)) / "asymptotics.csv"));
    }
    CHECK(index[1]["value"] == 0.01);

    const std::string bad = s.file("bad_sweep.json", R"({"sweep": {"path": "run.N", "values": [10]}})");
    CHECK(run({"simulate", "--config", bad, "--out", s.dir.string()}, out, err) == 2);
}
