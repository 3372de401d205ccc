#include "reachguide/presets.hpp"

namespace reachguide {

void ExperimentPreset::validate() const
{
    const SystemPtr sys = make_system(system, system_options);
    mpc.validate();
    train.validate(sys->horizon());
    net.validate();
    verify.validate();
    if (!net.domain_margin.empty() && net.domain_margin.size() != 1 &&
        net.domain_margin.size() != static_cast<std::size_t>(sys->state_dim()))
        throw ConfigError("preset " + name + ": domain_margin needs 1 or " + std::to_string(sys->state_dim()) +
                          " entries");
    if (!grid.empty()) {
        if (grid.size() != static_cast<std::size_t>(sys->state_dim()))
            throw ConfigError("preset " + name + ": grid needs one node count per state axis");
        for (int n : grid)
            if (n < 3) throw ConfigError("preset " + name + ": grid node counts must be >= 3");
    }
}

void ExperimentPreset::set_seed(std::uint64_t seed)
{
    mpc.seed = seed;
    train.seed = seed;
    net.init_seed = seed;
    verify.seed = seed;
}

void to_json(nlohmann::json& j, const ExperimentPreset& p)
{
    j = {{"name", p.name},
         {"system", p.system},
         {"description", p.description},
         {"system_options",
          {{"track_path", p.system_options.track_path},
           {"quad_gz", p.system_options.quad_gz},
           {"pubsub_a", p.system_options.pubsub_a},
           {"pubsub_b", p.system_options.pubsub_b}}},
         {"mpc", p.mpc},
         {"train", p.train},
         {"net", p.net},
         {"verify", p.verify},
         {"grid", p.grid},
         {"grid_snapshot_stride", p.grid_snapshot_stride}};
}

void from_json(const nlohmann::json& j, ExperimentPreset& p)
{
    static const char* known[] = {"name", "system", "description", "system_options", "mpc",  "train",
                                  "net",  "verify", "grid",        "grid_snapshot_stride", "preset"};
    for (const auto& [key, _] : j.items())
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw ConfigError("preset: unknown key '" + key + "'");
    try {
        p.name = j.value("name", p.name);
        p.system = j.value("system", p.system);
        p.description = j.value("description", p.description);
        if (j.contains("system_options")) {
            const auto& o = j.at("system_options");
            for (const auto& [key, _] : o.items())
                if (key != "track_path" && key != "quad_gz" && key != "pubsub_a" && key != "pubsub_b")
                    throw ConfigError("preset: unknown system option '" + key + "'");
            p.system_options.track_path = o.value("track_path", p.system_options.track_path);
            p.system_options.quad_gz = o.value("quad_gz", p.system_options.quad_gz);
            p.system_options.pubsub_a = o.value("pubsub_a", p.system_options.pubsub_a);
            p.system_options.pubsub_b = o.value("pubsub_b", p.system_options.pubsub_b);
        }
        if (j.contains("mpc")) from_json(j.at("mpc"), p.mpc);
        if (j.contains("train")) from_json(j.at("train"), p.train);
        if (j.contains("net")) from_json(j.at("net"), p.net);
        if (j.contains("verify")) from_json(j.at("verify"), p.verify);
        p.grid = j.value("grid", p.grid);
        p.grid_snapshot_stride = j.value("grid_snapshot_stride", p.grid_snapshot_stride);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("preset: ") + e.what());
    }
}

namespace {

// 65K / 10K batches, 20K pretrain, 10K finetune, width 512.
ExperimentPreset large_scale(const std::string& name, const std::string& system, int curriculum)
{
    ExperimentPreset p;
    p.name = name;
    p.system = system;
    p.description = "full-scale training column; needs a GPU-class budget";
    p.train.n_pde = 65000;
    p.train.n_mpc = 10000;
    p.train.pretrain_steps = 20000;
    p.train.curriculum_steps = curriculum;
    p.train.finetune_steps = 10000;
    p.train.lr = 2e-5;
    p.net.width = 512;
    p.verify.beta = 1e-16;
    p.verify.m_calib = 40000;
    return p;
}

// Desk scale: 8K / 2K batches, width 128, steps halved.
ExperimentPreset desk_scale(const std::string& name, const std::string& system, int curriculum)
{
    ExperimentPreset p;
    p.name = name;
    p.system = system;
    p.description = "desk-scale configuration; not part of the acceptance runs";
    p.train.n_pde = 8192;
    p.train.n_mpc = 2048;
    p.train.pretrain_steps = 10000;
    p.train.curriculum_steps = curriculum / 2;
    p.train.finetune_steps = 5000;
    p.net.width = 128;
    p.verify.beta = 1e-6;
    p.verify.m_calib = 20000;
    return p;
}

ExperimentPreset drone_desk()
{
    ExperimentPreset p;
    p.name = "drone_desk";
    p.system = "vertical_drone";
    p.description = "vertical drone on one CPU core in well under an hour";
    p.mpc.dataset_size = 300;
    p.train.n_pde = 2048;
    p.train.n_mpc = 1024;
    p.train.pretrain_steps = 1000;
    p.train.curriculum_steps = 10000;
    p.train.finetune_steps = 2000;
    p.train.lr = 1e-4;
    p.net.width = 128;
    p.net.domain_margin = {1.0, 1.0, 0.0};
    p.verify.epsilon = 1e-3;
    p.verify.beta = 1e-6;
    p.verify.m_calib = 20000;
    p.verify.m_volume = 1000000;
    p.verify.m_accuracy = 100000;
    p.grid = {201, 201, 13};
    return p;
}

ExperimentPreset drone_large()
{
    ExperimentPreset p = large_scale("drone_large", "vertical_drone", 40000);
    p.net.domain_margin = {1.0, 1.0, 0.0};
    p.grid = {201, 201, 13};
    return p;
}

} // namespace

std::vector<std::string> preset_names()
{
    return {"drone_desk",    "drone_large",    "quadrotor_desk", "quadrotor_large",
            "f1tenth_desk",  "f1tenth_large",  "pubsub40d_desk", "pubsub40d_large"};
}

ExperimentPreset get_preset(const std::string& name)
{
    ExperimentPreset p;
    if (name == "drone_desk") p = drone_desk();
    else if (name == "drone_large") p = drone_large();
    else if (name == "quadrotor_desk") p = desk_scale(name, "quadrotor13d", 100000);
    else if (name == "quadrotor_large") p = large_scale(name, "quadrotor13d", 100000);
    else if (name == "f1tenth_desk") p = desk_scale(name, "f1tenth7d", 200000);
    else if (name == "f1tenth_large") p = large_scale(name, "f1tenth7d", 200000);
    else if (name == "pubsub40d_desk") p = desk_scale(name, "pubsub40d", 120000);
    else if (name == "pubsub40d_large") p = large_scale(name, "pubsub40d", 120000);
    else throw ConfigError("unknown preset '" + name + "'");
    p.validate();
    return p;
}

ExperimentPreset load_preset_file(const std::string& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config " + path + ": expected a JSON object");
    ExperimentPreset p;
    if (j.contains("preset")) {
        p = get_preset(j.at("preset").get<std::string>());
    } else if (j.contains("system")) {
        const std::string sys = j.at("system").get<std::string>();
        const std::string base = sys == "vertical_drone" ? "drone_desk"
                                 : sys == "quadrotor13d" ? "quadrotor_desk"
                                 : sys == "f1tenth7d"    ? "f1tenth_desk"
                                 : sys == "pubsub40d"    ? "pubsub40d_desk"
                                                         : "";
        if (base.empty()) throw ConfigError("config " + path + ": unknown system '" + sys + "'");
        p = get_preset(base);
    } else {
        throw ConfigError("config " + path + ": needs \"preset\" or \"system\"");
    }
    from_json(j, p);
    p.validate();
    return p;
}

} // namespace reachguide
