#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "reachguide/training.hpp"
#include "reachguide/verify.hpp"

namespace reachguide {

/// Complete configuration for one system's pipeline.
struct ExperimentPreset {
    std::string name;
    std::string system;
    std::string description;
    SystemOptions system_options;
    MpcConfig mpc;
    TrainConfig train;
    NetConfig net;
    VerifyConfig verify;
    /// Node counts for the grid oracle; empty when no grid oracle is tractable.
    std::vector<int> grid;
    double grid_snapshot_stride = 0.02;

    /// Checks every module config; throws ConfigError.
    void validate() const;
    /// Applies one root seed to every module.
    void set_seed(std::uint64_t seed);
};

void to_json(nlohmann::json& j, const ExperimentPreset& p);
/// Partial objects override the fields already in `p`.
void from_json(const nlohmann::json& j, ExperimentPreset& p);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
ExperimentPreset get_preset(const std::string& name);

/// JSON config file: {"preset": name, ...overrides}. Without "preset" the
/// overrides apply to the system's desk preset, which needs "system".
ExperimentPreset load_preset_file(const std::string& path);

} // namespace reachguide
