#include "reachguide/cli.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "reachguide/contour.hpp"
#include "reachguide/gridsolver.hpp"
#include "reachguide/presets.hpp"

#ifndef REACHGUIDE_GIT_DESCRIBE
#define REACHGUIDE_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;

namespace reachguide {

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::add_input(const std::string& path)
{
    inputs.emplace_back(path, digest_string(read_text(path)));
}

nlohmann::json RunManifest::to_json() const
{
    char host[256] = "unknown";
    gethostname(host, sizeof host - 1);
    nlohmann::json in = nlohmann::json::array();
    for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"digest", digest}});
    return {{"format", "reachguide-manifest"},
            {"format_version", 1},
            {"tool_version", kToolVersion},
            {"git_describe", REACHGUIDE_GIT_DESCRIBE},
            {"command", command},
            {"argv", argv},
            {"config", config},
            {"seed", seed},
            {"threads", threads},
            {"inputs", in},
            {"outputs", outputs},
            {"started", started},
            {"finished", finished},
            {"host",
             {{"hostname", host},
              {"hardware_threads", std::thread::hardware_concurrency()},
              {"compiler", __VERSION__}}}};
}

void RunManifest::write(const std::string& dir)
{
    finished = utc_timestamp();
    write_text_atomic((fs::path(dir) / "manifest.json").string(), to_json().dump(2) + "\n");
}

namespace {

struct Globals {
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string out;
    bool quiet = false;
    std::vector<std::string> argv;
};

struct Source {
    std::string preset;
    std::string config;
    std::string system;
};

void add_source_options(CLI::App* cmd, Source& s)
{
    cmd->add_option("--preset", s.preset, "Named preset (see `reachguide presets`)");
    cmd->add_option("--config", s.config, "JSON config file");
    cmd->add_option("--system", s.system, "System name; selects its desk preset");
}

std::string desk_preset_for(const std::string& system)
{
    if (system == "vertical_drone") return "drone_desk";
    if (system == "quadrotor13d") return "quadrotor_desk";
    if (system == "f1tenth7d") return "f1tenth_desk";
    if (system == "pubsub40d") return "pubsub40d_desk";
    throw ConfigError("unknown system '" + system + "'");
}

ExperimentPreset resolve(const Source& s, const Globals& g)
{
    ExperimentPreset p;
    if (!s.config.empty()) p = load_preset_file(s.config);
    else if (!s.preset.empty()) p = get_preset(s.preset);
    else if (!s.system.empty()) p = get_preset(desk_preset_for(s.system));
    else throw ConfigError("one of --preset, --config or --system is required");
    if (!s.system.empty() && s.system != p.system)
        throw ConfigError("--system " + s.system + " conflicts with preset system " + p.system);
    if (g.seed_set) p.set_seed(g.seed);
    p.validate();
    return p;
}

std::string out_dir(const Globals& g, const std::string& fallback = "")
{
    const std::string dir = g.out.empty() ? fallback : g.out;
    if (dir.empty()) throw ConfigError("--out is required");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

RunManifest start_manifest(const std::string& command, const Globals& g, const nlohmann::json& config,
                           std::uint64_t seed)
{
    RunManifest m;
    m.command = command;
    m.argv = g.argv;
    m.config = config;
    m.seed = seed;
    m.threads = thread_count();
    m.started = utc_timestamp();
    return m;
}

void say(const Globals& g, const char* fmt, auto... args)
{
    if (g.quiet) return;
    std::fprintf(stderr, fmt, args...);
    std::fflush(stderr);
}

std::vector<double> parse_list(const std::string& text, const char* what)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string("malformed ") + what + ": '" + text + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Loading artifacts

struct LoadedCheckpoint {
    ExperimentPreset preset;
    SystemPtr system;
    Checkpoint ckpt;
};

LoadedCheckpoint load_run_checkpoint(const std::string& path, const std::string& expect_system, const Globals& g)
{
    const nlohmann::json header = read_checkpoint_header(path);
    const std::string name = header.value("system", "");
    LoadedCheckpoint out;
    out.preset = get_preset(desk_preset_for(name));
    const nlohmann::json extra = header.value("extra", nlohmann::json::object());
    if (extra.contains("preset")) from_json(extra.at("preset"), out.preset);
    if (g.seed_set) out.preset.set_seed(g.seed);
    const std::string sys_name = expect_system.empty() ? name : expect_system;
    out.system = make_system(sys_name, out.preset.system_options);
    out.ckpt = load_checkpoint(path, out.system);
    return out;
}

// ---------------------------------------------------------------------------
// Commands

struct GenDataArgs {
    Source src;
    int size = 0;
    std::string format = "jsonl";
};

std::string cmd_gen_data(const GenDataArgs& a, const Globals& g)
{
    ExperimentPreset p = resolve(a.src, g);
    if (a.size > 0) p.mpc.dataset_size = a.size;
    p.mpc.validate();
    const std::string dir = out_dir(g);
    RunManifest m = start_manifest("gen-data", g, p, p.mpc.seed);
    const SystemPtr sys = make_system(p.system, p.system_options);
    const auto t0 = std::chrono::steady_clock::now();
    const MpcDataset ds = generate(*sys, p.mpc);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string path;
    if (a.format == "jsonl") {
        path = join(dir, "dataset.jsonl");
        ds.save_jsonl(path);
    } else if (a.format == "bin") {
        path = join(dir, "dataset.bin");
        ds.save_binary(path);
    } else {
        throw ConfigError("--format must be jsonl or bin");
    }
    m.outputs.push_back(path);
    m.write(dir);
    say(g, "gen-data: %zu samples from %d points in %.1f s -> %s\n", ds.size(), p.mpc.dataset_size, secs,
        path.c_str());
    return path;
}

struct GroundTruthArgs {
    Source src;
    std::string grid;
    double stride = 0.0;
};

std::string cmd_ground_truth(const GroundTruthArgs& a, const Globals& g)
{
    ExperimentPreset p = resolve(a.src, g);
    if (!a.grid.empty()) {
        p.grid.clear();
        for (double v : parse_list(a.grid, "--grid")) p.grid.push_back(static_cast<int>(v));
    }
    if (a.stride > 0.0) p.grid_snapshot_stride = a.stride;
    if (p.grid.empty())
        throw ConfigError("preset " + p.name + " has no grid oracle; pass --grid with one node count per axis");
    p.validate();
    const std::string dir = out_dir(g);
    RunManifest m = start_manifest("ground-truth", g, p, p.mpc.seed);
    const SystemPtr sys = make_system(p.system, p.system_options);
    Grid grid = grid_for(*sys, p.grid);
    grid.snapshot_stride = p.grid_snapshot_stride;
    SolveStats stats;
    const auto t0 = std::chrono::steady_clock::now();
    const GridValueFn vf = solve_vi(sys, grid, &stats);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string path = join(dir, "value.vf");
    vf.save(path);
    const double safe = 1.0 - vf.brt_volume(0.0);
    const nlohmann::json summary = {{"system", p.system},   {"grid", p.grid},       {"safe_volume", safe},
                                    {"dt", stats.dt},       {"steps", stats.steps}, {"seconds", secs},
                                    {"dissipation", stats.dissipation}};
    write_text_atomic(join(dir, "summary.json"), summary.dump(2) + "\n");
    m.outputs = {path, join(dir, "summary.json")};
    m.write(dir);
    say(g, "ground-truth: safe volume %.4f in %.1f s -> %s\n", safe, secs, path.c_str());
    return path;
}

struct TrainArgs {
    Source src;
    std::string dataset;
    bool no_pretrain = false;
    bool no_curriculum = false;
    bool no_time_curriculum = false;
    bool no_refine = false;
    bool no_finetune = false;
};

std::string cmd_train(const TrainArgs& a, const Globals& g)
{
    ExperimentPreset p = resolve(a.src, g);
    if (a.no_pretrain) p.train.pretrain = false;
    if (a.no_curriculum) p.train.curriculum = false;
    if (a.no_time_curriculum) p.train.time_curriculum = false;
    if (a.no_refine) p.train.refine = false;
    if (a.no_finetune) p.train.finetune = false;
    const std::string dir = out_dir(g);
    RunManifest m = start_manifest("train", g, p, p.train.seed);
    const SystemPtr sys = make_system(p.system, p.system_options);
    MpcDataset initial;
    if (!a.dataset.empty()) {
        initial = MpcDataset::load(a.dataset);
        m.add_input(a.dataset);
    }
    const auto on_log = [&](const MetricRow& r) {
        say(g, "%8lld %-10s data %.5f pde %.5f lambda %.4g t %.3f\n", static_cast<long long>(r.step),
            r.phase.c_str(), r.l_data, r.l_pde, r.lambda, r.t_window);
    };
    TrainResult r = train_full(sys, p.train, p.mpc, p.net, a.dataset.empty() ? nullptr : &initial, on_log);
    const std::string ckpt = join(dir, "final.ckpt");
    r.report.checkpoint = ckpt;
    nlohmann::json preset_json = p;
    save_checkpoint(ckpt, *r.net, r.adam, {{"preset", preset_json}, {"report", r.report.summary()}});
    r.report.save_csv(join(dir, "metrics.csv"));
    write_text_atomic(join(dir, "report.json"), r.report.summary().dump(2) + "\n");
    m.outputs = {ckpt, join(dir, "metrics.csv"), join(dir, "report.json")};
    m.write(dir);
    say(g, "train: %.1f s, final loss %.5f -> %s\n", r.report.wall_seconds, r.report.final_loss, ckpt.c_str());
    return ckpt;
}

struct VerifyArgs {
    std::string checkpoint;
    std::string system;
    std::string oracle;
    double eps = 0.0;
    double beta = 0.0;
    int calib = 0;
    int volume = 0;
    int accuracy = 0;
    double dt = 0.0;
};

std::string cmd_verify(const VerifyArgs& a, const Globals& g)
{
    LoadedCheckpoint lc = load_run_checkpoint(a.checkpoint, a.system, g);
    VerifyConfig& vc = lc.preset.verify;
    if (a.eps > 0.0) vc.epsilon = a.eps;
    if (a.beta > 0.0) vc.beta = a.beta;
    if (a.calib > 0) vc.m_calib = a.calib;
    if (a.volume > 0) vc.m_volume = a.volume;
    if (a.accuracy > 0) vc.m_accuracy = a.accuracy;
    if (a.dt > 0.0) vc.dt = a.dt;
    vc.validate();
    std::string dir, path;
    if (!g.out.empty() && fs::path(g.out).extension() == ".json") {
        path = g.out;
        dir = fs::path(g.out).parent_path().string();
        if (dir.empty()) dir = ".";
        Globals g2 = g;
        g2.out = dir;
        out_dir(g2);
    } else {
        dir = out_dir(g);
        path = join(dir, "verify.json");
    }
    nlohmann::json cfg = vc;
    RunManifest m = start_manifest("verify", g, {{"verify", cfg}, {"system", lc.system->name()}}, vc.seed);
    m.add_input(a.checkpoint);
    const auto t0 = std::chrono::steady_clock::now();
    const VerifyResult r = verify(*lc.system, *lc.ckpt.net, vc);
    nlohmann::json out = r.to_json();
    out["system"] = lc.system->name();
    out["config"] = cfg;
    out["learned_volume"] = recovered_volume(*lc.system, *lc.ckpt.net, 0.0, vc);
    if (!a.oracle.empty()) {
        const GridValueFn oracle = GridValueFn::load(a.oracle, lc.system);
        m.add_input(a.oracle);
        const AccuracyMetrics acc = accuracy_metrics(*lc.ckpt.net, oracle, vc);
        out["mse"] = acc.mse;
        out["false_positive_rate"] = acc.false_positive_rate;
        out["accuracy_samples"] = acc.samples;
        out["oracle_safe_volume"] = 1.0 - oracle.brt_volume(0.0);
    }
    out["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text_atomic(path, out.dump(2) + "\n");
    m.outputs.push_back(path);
    m.write(dir);
    say(g, "verify: delta %s, recovered volume %.4f (learned %.4f)\n",
        std::isfinite(r.delta) ? std::to_string(r.delta).c_str() : "inf (empty verified set)", r.volume,
        out["learned_volume"].get<double>());
    return path;
}

struct EvalArgs {
    std::string checkpoint;
    int runs = 100;
    double horizon = 0.0;
    std::string starts = "verified";
    double delta = NAN;
    std::string verify_json;
    bool no_mpc = false;
    double gamma = 1.0;
    double target_speed = 4.0;
};

std::string cmd_eval_policies(const EvalArgs& a, const Globals& g)
{
    LoadedCheckpoint lc = load_run_checkpoint(a.checkpoint, "", g);
    const SystemModel& sys = *lc.system;
    const ValueNet& net = *lc.ckpt.net;
    if (a.runs < 1) throw ConfigError("--runs must be >= 1");
    const std::string dir = out_dir(g);
    RunManifest m = start_manifest("eval-policies", g, lc.preset, lc.preset.verify.seed);
    m.add_input(a.checkpoint);

    double delta = a.delta;
    if (std::isnan(delta) && !a.verify_json.empty()) {
        const nlohmann::json v = nlohmann::json::parse(read_text(a.verify_json));
        m.add_input(a.verify_json);
        delta = v.at("delta").is_null() ? INFINITY : v.at("delta").get<double>();
    }
    if (std::isnan(delta)) delta = 0.0;

    Eigen::MatrixXd starts(sys.state_dim(), a.runs);
    RngStream rng(lc.preset.verify.seed, {tag(StreamTag::PolicyEval)});
    if (a.starts == "uniform") {
        for (int k = 0; k < a.runs; ++k) starts.col(k) = sys.sample_state(rng);
    } else if (a.starts == "verified") {
        if (!std::isfinite(delta)) throw ConfigError("verified set is empty; use --starts uniform");
        const long long cap = 1000LL * a.runs;
        long long drawn = 0;
        for (int k = 0; k < a.runs;) {
            if (++drawn > cap) throw ConfigError("could not draw starts with V > delta within the sampling cap");
            const StateVec x = sys.sample_state(rng);
            if (net.value(x, 0.0) > delta) starts.col(k++) = x;
        }
    } else {
        throw ConfigError("--starts must be uniform or verified");
    }

    const double horizon = a.horizon > 0.0 ? a.horizon : sys.horizon();
    ValuePolicy learned(net);
    std::unique_ptr<MpcPolicy> mpc;
    std::unique_ptr<PurePursuitPolicy> nominal;
    std::unique_ptr<FilteredPolicy> filtered;
    std::vector<const ControlPolicy*> policies{&learned};
    if (!a.no_mpc) {
        mpc = std::make_unique<MpcPolicy>(sys, lc.preset.mpc);
        policies.push_back(mpc.get());
    }
    if (dynamic_cast<const F1Tenth7D*>(&sys)) {
        nominal = std::make_unique<PurePursuitPolicy>(sys, a.target_speed);
        filtered = std::make_unique<FilteredPolicy>(*nominal, net, a.gamma);
        policies.push_back(nominal.get());
        policies.push_back(filtered.get());
    }
    const auto rows = evaluate_policies(sys, policies, starts, lc.preset.verify.dt, horizon);
    const std::string csv = join(dir, "policies.csv");
    write_text_atomic(csv, policy_table_csv(rows));
    m.outputs.push_back(csv);
    m.write(dir);
    for (const auto& r : rows)
        say(g, "%-18s safe %.3f  collisions %.3f  distance %.2f  step %.1f us\n", r.name.c_str(), r.safe_fraction,
            r.collision_rate, r.mean_distance, r.mean_step_us);
    return csv;
}

struct ExportArgs {
    std::string run;
    std::string checkpoint;
    std::string oracle;
    std::string verify_json;
    std::string axes = "0,1";
    std::string point;
    double t = 0.0;
    int res = 101;
};

std::string cmd_export_plots(const ExportArgs& a, const Globals& g)
{
    std::string ckpt = a.checkpoint;
    std::string verify_json = a.verify_json;
    if (!a.run.empty()) {
        if (ckpt.empty()) ckpt = join(a.run, "final.ckpt");
        if (verify_json.empty() && fs::exists(join(a.run, "verify.json"))) verify_json = join(a.run, "verify.json");
    }
    if (ckpt.empty()) throw ConfigError("--run or --checkpoint is required");
    if (!fs::exists(ckpt)) throw IoError("missing checkpoint " + ckpt);
    LoadedCheckpoint lc = load_run_checkpoint(ckpt, "", g);
    const SystemModel& sys = *lc.system;
    const std::string dir = out_dir(g, a.run.empty() ? "" : join(a.run, "plots"));
    RunManifest m = start_manifest("export-plots", g, lc.preset, lc.preset.verify.seed);
    m.add_input(ckpt);

    const std::vector<double> ax = parse_list(a.axes, "--axes");
    if (ax.size() != 2) throw ConfigError("--axes needs two indices");
    StateVec point = 0.5 * (sys.state_box().lo + sys.state_box().hi);
    if (!a.point.empty()) {
        const std::vector<double> pt = parse_list(a.point, "--point");
        if (static_cast<int>(pt.size()) != sys.state_dim())
            throw ConfigError("--point needs " + std::to_string(sys.state_dim()) + " values");
        point = Eigen::Map<const Eigen::VectorXd>(pt.data(), sys.state_dim());
    }
    const int axis_x = static_cast<int>(ax[0]), axis_y = static_cast<int>(ax[1]);

    double delta = NAN;
    nlohmann::json metrics = nlohmann::json::object();
    if (!verify_json.empty()) {
        metrics["verify"] = nlohmann::json::parse(read_text(verify_json));
        m.add_input(verify_json);
        delta = metrics["verify"]["delta"].is_null() ? INFINITY : metrics["verify"]["delta"].get<double>();
    }
    const ValueSlice learned = value_slice(*lc.ckpt.net, axis_x, axis_y, point, a.t, a.res, a.res);
    write_text_atomic(join(dir, "slice_learned.csv"), slice_csv(learned));
    std::vector<std::pair<double, std::vector<Polyline>>> learned_levels{{0.0, contour_lines(learned, 0.0)}};
    if (!std::isnan(delta)) learned_levels.emplace_back(delta, contour_lines(learned, delta));
    write_text_atomic(join(dir, "contours_learned.csv"), contours_csv(learned_levels));
    m.outputs = {join(dir, "slice_learned.csv"), join(dir, "contours_learned.csv")};

    if (!a.oracle.empty()) {
        const GridValueFn oracle = GridValueFn::load(a.oracle, lc.system);
        m.add_input(a.oracle);
        const ValueSlice os = value_slice(oracle, axis_x, axis_y, point, a.t, a.res, a.res);
        write_text_atomic(join(dir, "slice_oracle.csv"), slice_csv(os));
        write_text_atomic(join(dir, "contours_oracle.csv"), contours_csv({{0.0, contour_lines(os, 0.0)}}));
        m.outputs.push_back(join(dir, "slice_oracle.csv"));
        m.outputs.push_back(join(dir, "contours_oracle.csv"));
    }
    const nlohmann::json header = read_checkpoint_header(ckpt);
    if (header.contains("extra") && header["extra"].contains("report")) metrics["train"] = header["extra"]["report"];
    if (!a.run.empty() && fs::exists(join(a.run, "metrics.csv"))) {
        write_text_atomic(join(dir, "loss_curve.csv"), read_text(join(a.run, "metrics.csv")));
        m.outputs.push_back(join(dir, "loss_curve.csv"));
    }
    metrics["slice"] = {{"axes", {axis_x, axis_y}}, {"point", std::vector<double>(point.data(), point.data() + point.size())},
                        {"t", a.t}, {"resolution", a.res}};
    write_text_atomic(join(dir, "metrics.json"), metrics.dump(2) + "\n");
    m.outputs.push_back(join(dir, "metrics.json"));
    m.write(dir);
    say(g, "export-plots: %zu files -> %s\n", m.outputs.size(), dir.c_str());
    return dir;
}

int cmd_repro(const std::string& preset, const Globals& g)
{
    const std::string root = out_dir(g, "runs/" + preset);
    ExperimentPreset p = get_preset(preset);
    if (g.seed_set) p.set_seed(g.seed);
    RunManifest m = start_manifest("repro", g, p, p.train.seed);
    Globals sub = g;
    Source src;
    src.preset = preset;

    sub.out = join(root, "data");
    GenDataArgs gd;
    gd.src = src;
    const std::string dataset = cmd_gen_data(gd, sub);

    std::string oracle;
    if (!p.grid.empty()) {
        sub.out = join(root, "ground_truth");
        GroundTruthArgs gt;
        gt.src = src;
        oracle = cmd_ground_truth(gt, sub);
    }

    sub.out = join(root, "train");
    TrainArgs ta;
    ta.src = src;
    ta.dataset = dataset;
    const std::string ckpt = cmd_train(ta, sub);

    VerifyArgs va;
    va.checkpoint = ckpt;
    va.oracle = oracle;
    const std::string vj = cmd_verify(va, sub);

    sub.out = join(root, "plots");
    ExportArgs ea;
    ea.run = join(root, "train");
    ea.oracle = oracle;
    ea.verify_json = vj;
    if (p.system == "vertical_drone") ea.point = "0,0,12";
    cmd_export_plots(ea, sub);

    m.outputs = {dataset, ckpt, vj, join(root, "plots")};
    if (!oracle.empty()) m.outputs.push_back(oracle);
    m.write(root);
    return kExitOk;
}

} // namespace

// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv)
{
    CLI::App app{"reachguide: learned Hamilton-Jacobi reachability with MPC data and conformal verification"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    for (int i = 0; i < argc; ++i) g.argv.emplace_back(argv[i]);
    auto* seed_opt = app.add_option("--seed", g.seed, "Root seed for every module");
    app.add_option("--threads", g.threads, "Worker threads (fallback: REACHGUIDE_THREADS)");
    app.add_option("--out", g.out, "Output directory");
    app.add_flag("--quiet", g.quiet, "No progress output");

    GenDataArgs gd;
    auto* c_gen = app.add_subcommand("gen-data", "Generate an MPC value dataset");
    add_source_options(c_gen, gd.src);
    c_gen->add_option("--size", gd.size, "Number of sampled (t, x) points");
    c_gen->add_option("--format", gd.format, "jsonl or bin");

    GroundTruthArgs gt;
    auto* c_gt = app.add_subcommand("ground-truth", "Solve the grid oracle");
    add_source_options(c_gt, gt.src);
    c_gt->add_option("--grid", gt.grid, "Node counts per axis, comma separated");
    c_gt->add_option("--stride", gt.stride, "Snapshot spacing in seconds");

    TrainArgs ta;
    auto* c_train = app.add_subcommand("train", "Train a value network");
    add_source_options(c_train, ta.src);
    c_train->add_option("--dataset", ta.dataset, "Initial dataset file (generated when absent)");
    c_train->add_flag("--no-pretrain", ta.no_pretrain);
    c_train->add_flag("--no-curriculum", ta.no_curriculum);
    c_train->add_flag("--no-time-curriculum", ta.no_time_curriculum);
    c_train->add_flag("--no-refine", ta.no_refine);
    c_train->add_flag("--no-finetune", ta.no_finetune);

    VerifyArgs va;
    auto* c_verify = app.add_subcommand("verify", "Conformal verification and accuracy metrics");
    c_verify->add_option("--checkpoint", va.checkpoint)->required();
    c_verify->add_option("--system", va.system, "Expected system; mismatches are configuration errors");
    c_verify->add_option("--oracle", va.oracle, "Grid value file for MSE and false-positive rate");
    c_verify->add_option("--eps", va.eps);
    c_verify->add_option("--beta", va.beta);
    c_verify->add_option("--calib", va.calib, "Calibration sample count");
    c_verify->add_option("--volume-samples", va.volume);
    c_verify->add_option("--accuracy-samples", va.accuracy);
    c_verify->add_option("--dt", va.dt, "Rollout time step");

    EvalArgs ea;
    auto* c_eval = app.add_subcommand("eval-policies", "Closed-loop comparison of control policies");
    c_eval->add_option("--checkpoint", ea.checkpoint)->required();
    c_eval->add_option("--runs", ea.runs);
    c_eval->add_option("--horizon", ea.horizon, "Rollout length in seconds (default T)");
    c_eval->add_option("--starts", ea.starts, "uniform or verified");
    c_eval->add_option("--delta", ea.delta, "Verified level for --starts verified");
    c_eval->add_option("--verify", ea.verify_json, "verify.json to read delta from");
    c_eval->add_flag("--no-mpc", ea.no_mpc);
    c_eval->add_option("--gamma", ea.gamma, "Filter relaxation");
    c_eval->add_option("--target-speed", ea.target_speed, "Pure pursuit speed (F1Tenth)");

    ExportArgs xa;
    auto* c_export = app.add_subcommand("export-plots", "Write slice, contour and metric tables");
    c_export->add_option("--run", xa.run, "Training output directory");
    c_export->add_option("--checkpoint", xa.checkpoint);
    c_export->add_option("--oracle", xa.oracle);
    c_export->add_option("--verify", xa.verify_json);
    c_export->add_option("--axes", xa.axes, "Two state indices, comma separated");
    c_export->add_option("--point", xa.point, "Full state for the fixed components");
    c_export->add_option("--t", xa.t);
    c_export->add_option("--res", xa.res, "Samples per axis");

    std::string repro_preset;
    auto* c_repro = app.add_subcommand("repro", "gen-data, ground-truth, train, verify and export for one preset");
    c_repro->add_option("preset", repro_preset)->required();

    std::string show;
    auto* c_presets = app.add_subcommand("presets", "List presets or print one as JSON");
    c_presets->add_option("name", show);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    g.seed_set = seed_opt->count() > 0;

    set_thread_count(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    init_threads_from_env();
    if (g.threads > 0) set_thread_count(g.threads);

    try {
        if (c_gen->parsed()) cmd_gen_data(gd, g);
        else if (c_gt->parsed()) cmd_ground_truth(gt, g);
        else if (c_train->parsed()) cmd_train(ta, g);
        else if (c_verify->parsed()) cmd_verify(va, g);
        else if (c_eval->parsed()) cmd_eval_policies(ea, g);
        else if (c_export->parsed()) cmd_export_plots(xa, g);
        else if (c_repro->parsed()) cmd_repro(repro_preset, g);
        else if (c_presets->parsed()) {
            if (show.empty()) {
                for (const auto& n : preset_names()) std::printf("%s\n", n.c_str());
            } else {
                const nlohmann::json j = get_preset(show);
                std::printf("%s\n", j.dump(2).c_str());
            }
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const OutOfDomainError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOther;
    }
    return kExitOk;
}

} // namespace reachguide
