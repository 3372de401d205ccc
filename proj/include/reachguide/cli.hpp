#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace reachguide {

enum ExitCode : int { kExitOk = 0, kExitOther = 1, kExitConfig = 2, kExitNumeric = 3, kExitIo = 4 };

/// Written as manifest.json in every output directory.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    int threads = 1;
    std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
    std::vector<std::string> outputs;
    std::string started;
    std::string finished;

    void add_input(const std::string& path);
    nlohmann::json to_json() const;
    void write(const std::string& dir);
};

/// UTC time as ISO 8601.
std::string utc_timestamp();

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

} // namespace reachguide
