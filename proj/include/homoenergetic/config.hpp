#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "homoenergetic/asymptotics.hpp"
#include "homoenergetic/dsmc.hpp"
#include "homoenergetic/kernel.hpp"
#include "homoenergetic/linearized.hpp"

namespace homoenergetic {

using Json = nlohmann::ordered_json;

enum class Mode
{
    Abar,
    Simulate,
    Asymptotics,
    Validate
};

struct AbarSettings
{
    int N = 16;
    AssemblyOptions assembly;
    //! Two-level Richardson extrapolation of a_bar in the grazing cutoff eps (non-cutoff laws).
    bool extrapolate_eps = false;
    double eps_ratio = 0.5;
};

struct AsymptoticsSettings
{
    double t_end = 1000.0;
    int points = 400;
    AMode a_mode = AMode::Frozen;
    double beta0 = 1e-3;
    double a_bar = 0.0;  //!< 0: computed from the linearized module
    int basis_size = 16;
};

struct SweepSettings
{
    std::string path;  //!< dotted key path inside the config, e.g. "kernel.grazing_eps"
    std::vector<Json> values;
};

struct ScenarioConfig
{
    Mode mode = Mode::Simulate;
    CollisionKernel kernel = CollisionKernel::constant_cutoff(0.5);
    DeformationFamily family = DeformationFamily::simple_shear(1.0);
    SimulationConfig simulation;
    int replicas = 1;
    AbarSettings abar;
    AsymptoticsSettings asymptotics;
    std::optional<SweepSettings> sweep;
    std::string output_dir = "homoen_out";
    bool seed_drawn = false;
    Json source;  //!< the parsed input document
};

//! Parse and validate; ConfigError names the offending key path.
ScenarioConfig parse_config(const Json& doc);
ScenarioConfig load_config(const std::string& path);

//! Fully resolved configuration (defaults filled in, seed recorded).
Json resolved_config(const ScenarioConfig& config);

Json kernel_to_json(const CollisionKernel& kernel);
CollisionKernel kernel_from_json(const Json& j, const std::string& path = "kernel");
Json family_to_json(const DeformationFamily& family);
DeformationFamily family_from_json(const Json& j, const std::string& path = "family");

//! Copy of doc with the dotted path set to value (objects created as needed).
Json with_value(const Json& doc, const std::string& dotted_path, const Json& value);

std::string mode_name(Mode mode);

}  // namespace homoenergetic
