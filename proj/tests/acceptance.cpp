// Acceptance run: one PASS/FAIL line per criterion, results in acceptance.json.
//
//   acceptance [--work DIR] [--reuse] [criterion ...]
//
// Without criterion numbers every criterion runs. --reuse loads a training
// checkpoint from DIR when its stored preset matches the requested one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include "reachguide/cli.hpp"
#include "reachguide/gridsolver.hpp"
#include "reachguide/presets.hpp"
#include "reachguide/training.hpp"
#include "reachguide/verify.hpp"

using namespace reachguide;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Pinned tolerances

constexpr double kC1Volume = 0.2622, kC1Tol = 0.015, kC1Seconds = 300.0;
constexpr double kC2Mse = 0.05, kC2Volume = 0.20, kC2Seconds = 7200.0;
constexpr double kC5Noise = 0.02;
constexpr double kC6Ratio = 5.0;
constexpr int kC7Points = 1000;
constexpr std::size_t kC8Samples = 10000;
constexpr int kC9Points = 1000;
constexpr double kC9Margin = 0.05, kC9Fraction = 0.99;
constexpr double kC10Input = 1e-4, kC10Param = 1e-3;
constexpr int kC11Points = 10000;
constexpr int kC13Trials = 1000;
constexpr double kC13Beta = 1e-3, kC13Eps = 0.01;
constexpr int kC14Instances = 1000;
constexpr double kC14Match = 1e-3, kC14Residual = 1e-9;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    explicit Outcome(int i = 0) : id(i) {}
    int id = 0;
    bool pass = false;
    std::string summary;
    nlohmann::json detail = nlohmann::json::object();
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared state: the drone grid oracle and the training runs

struct Context {
    fs::path work;
    bool reuse = false;
    std::unique_ptr<GridValueFn> oracle;
    double oracle_seconds = 0.0;
    std::map<std::string, nlohmann::json> runs;
};

const GridValueFn& drone_oracle(Context& c)
{
    if (!c.oracle) {
        const ExperimentPreset p = get_preset("drone_desk");
        auto sys = make_system(p.system);
        Grid g = grid_for(*sys, p.grid);
        g.snapshot_stride = p.grid_snapshot_stride;
        const auto t0 = Clock::now();
        c.oracle = std::make_unique<GridValueFn>(solve_vi(sys, g));
        c.oracle_seconds = since(t0);
        c.oracle->save((c.work / "drone_grid.vf").string());
    }
    return *c.oracle;
}

// Trains (or reloads) one drone run and verifies it against the oracle.
nlohmann::json drone_run(Context& c, const std::string& label, const ExperimentPreset& p)
{
    if (auto it = c.runs.find(label); it != c.runs.end()) return it->second;
    const GridValueFn& oracle = drone_oracle(c);
    auto sys = make_system(p.system);
    const std::string ckpt = (c.work / (label + ".ckpt")).string();
    const nlohmann::json want = p;
    ValueNetPtr net;
    double train_s = NAN;
    std::size_t refinements = 0;
    if (c.reuse && fs::exists(ckpt)) {
        const nlohmann::json header = read_checkpoint_header(ckpt);
        const nlohmann::json extra = header.value("extra", nlohmann::json::object());
        if (extra.value("preset", nlohmann::json()) == want) {
            net = load_checkpoint(ckpt, sys).net;
            train_s = extra.value("train_seconds", NAN);
            refinements = extra.value("refinements", std::size_t{0});
            std::printf("  [%s] reusing %s\n", label.c_str(), ckpt.c_str());
        }
    }
    if (!net) {
        std::printf("  [%s] training\n", label.c_str());
        std::fflush(stdout);
        const auto t0 = Clock::now();
        TrainResult r = train_full(sys, p.train, p.mpc, p.net);
        train_s = since(t0);
        refinements = r.report.refinements.size();
        net = r.net;
        save_checkpoint(ckpt, *net, r.adam,
                        {{"preset", want}, {"train_seconds", train_s}, {"refinements", refinements}});
    }
    const auto t1 = Clock::now();
    const VerifyResult v = verify(*sys, *net, p.verify);
    const AccuracyMetrics acc = accuracy_metrics(*net, oracle, p.verify);
    const double verify_s = since(t1);
    nlohmann::json out = {{"label", label},
                          {"dataset_size", p.mpc.dataset_size},
                          {"refine", p.train.refine},
                          {"time_curriculum", p.train.time_curriculum},
                          {"train_seconds", train_s},
                          {"verify_seconds", verify_s},
                          {"refinements", refinements},
                          {"mse", acc.mse},
                          {"false_positive_rate", acc.false_positive_rate},
                          {"delta", std::isfinite(v.delta) ? nlohmann::json(v.delta) : nlohmann::json()},
                          {"volume", v.volume},
                          {"volume_se", v.volume_se},
                          {"calibration_unsafe", v.unsafe_total},
                          {"retained", v.retained},
                          {"violations", v.violations}};
    std::printf("  [%s] train %.0f s, mse %.4f, fpr %.4f, delta %.4f, volume %.4f\n", label.c_str(), train_s,
                acc.mse, acc.false_positive_rate, v.delta, v.volume);
    std::fflush(stdout);
    c.runs[label] = out;
    return out;
}

ExperimentPreset drone_preset() { return get_preset("drone_desk"); }

ExperimentPreset desk_preset(const std::string& system)
{
    for (const auto& name : preset_names()) {
        const ExperimentPreset p = get_preset(name);
        if (p.system == system && name.ends_with("_desk")) return p;
    }
    throw ConfigError("no desk preset for " + system);
}

// ---------------------------------------------------------------------------
// 1-5: drone reproductions

Outcome c1(Context& c)
{
    const GridValueFn& vf = drone_oracle(c);
    const double safe = 1.0 - vf.brt_volume(0.0);
    Outcome o(1);
    o.pass = std::abs(safe - kC1Volume) <= kC1Tol && c.oracle_seconds < kC1Seconds;
    o.summary = fmt("drone grid 201x201x13 safe volume %.2f%% (target %.2f +- %.1f pts), %.0f s on %d thread(s) "
                    "(limit %.0f s)",
                    100 * safe, 100 * kC1Volume, 100 * kC1Tol, c.oracle_seconds, thread_count(), kC1Seconds);
    o.detail = {{"safe_volume", safe}, {"seconds", c.oracle_seconds}, {"threads", thread_count()}};
    return o;
}

Outcome c2(Context& c)
{
    const nlohmann::json r = drone_run(c, "full", drone_preset());
    const double mse = r["mse"], vol = r["volume"], secs = r["train_seconds"].get<double>() + r["verify_seconds"].get<double>();
    Outcome o(2);
    o.pass = mse <= kC2Mse && vol >= kC2Volume && secs <= kC2Seconds;
    o.summary = fmt("drone learned value: MSE %.4f (<= %.2f), recovered volume %.2f%% (>= %.0f%%), %.0f s (<= %.0f s)",
                    mse, kC2Mse, 100 * vol, 100 * kC2Volume, secs, kC2Seconds);
    o.detail = r;
    return o;
}

Outcome c3(Context& c)
{
    const nlohmann::json full = drone_run(c, "full", drone_preset());
    ExperimentPreset p = drone_preset();
    p.train.refine = false;
    const nlohmann::json off = drone_run(c, "no_refine", p);
    Outcome o(3);
    o.pass = off["mse"].get<double>() > full["mse"].get<double>() &&
             off["volume"].get<double>() < full["volume"].get<double>();
    o.summary = fmt("refinement ablation: without refinement MSE %.4f / volume %.2f%%, with %.4f / %.2f%% "
                    "(needs strictly worse on both)",
                    off["mse"].get<double>(), 100 * off["volume"].get<double>(), full["mse"].get<double>(),
                    100 * full["volume"].get<double>());
    o.detail = {{"full", full}, {"no_refine", off}};
    return o;
}

Outcome c4(Context& c)
{
    const nlohmann::json full = drone_run(c, "full", drone_preset());
    ExperimentPreset p = drone_preset();
    p.train.time_curriculum = false;
    const nlohmann::json off = drone_run(c, "no_time_curriculum", p);
    Outcome o(4);
    o.pass = off["volume"].get<double>() <= full["volume"].get<double>();
    o.summary = fmt("time curriculum ablation: without %.2f%%, with %.2f%% (needs without <= with)",
                    100 * off["volume"].get<double>(), 100 * full["volume"].get<double>());
    o.detail = {{"full", full}, {"no_time_curriculum", off}};
    return o;
}

Outcome c5(Context& c)
{
    std::vector<double> vols;
    nlohmann::json runs = nlohmann::json::array();
    for (int size : {20, 80, 160, 300}) {
        ExperimentPreset p = drone_preset();
        const bool is_full = size == p.mpc.dataset_size;
        p.mpc.dataset_size = size;
        const nlohmann::json r = drone_run(c, is_full ? "full" : "dataset_" + std::to_string(size), p);
        vols.push_back(r["volume"]);
        runs.push_back(r);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < vols.size(); ++i) monotone = monotone && vols[i] >= vols[i - 1] - kC5Noise;
    const bool plateau = std::abs(vols[3] - vols[2]) <= kC5Noise;
    Outcome o(5);
    o.pass = monotone && plateau;
    o.summary = fmt("dataset size 20/80/160/300: volume %.2f / %.2f / %.2f / %.2f %% (non-decreasing within %.0f pts, "
                    "160 vs 300 within %.0f pts)",
                    100 * vols[0], 100 * vols[1], 100 * vols[2], 100 * vols[3], 100 * kC5Noise, 100 * kC5Noise);
    o.detail = {{"runs", runs}, {"monotone", monotone}, {"plateau", plateau}};
    return o;
}

// ---------------------------------------------------------------------------
// 6: policy latency

Outcome c6(Context&)
{
    const ExperimentPreset p = get_preset("f1tenth_desk");
    auto sys = make_system(p.system);
    const auto& car = static_cast<const F1Tenth7D&>(*sys);
    // Step latency does not depend on the weights; an initialised desk-width net is timed.
    ValueNet net(sys, p.net);
    ValuePolicy learned(net);
    MpcConfig mc = p.mpc;
    mc.n_trajectories = 100;
    mc.n_rounds = 10;
    MpcPolicy mpc(*sys, mc);
    Eigen::MatrixXd starts(7, 5);
    for (int k = 0; k < starts.cols(); ++k) {
        const double s = k * car.track().length() / starts.cols();
        const Eigen::Vector2d q = car.track().point_at(s);
        starts.col(k).setZero();
        starts(0, k) = q.x();
        starts(1, k) = q.y();
        starts(3, k) = 3.0;
        starts(4, k) = car.track().heading_at(s);
    }
    const auto stats = evaluate_policies(*sys, {&learned, &mpc}, starts, 0.02, 0.5);
    const double ratio = stats[1].mean_step_us / stats[0].mean_step_us;
    Outcome o(6);
    o.pass = ratio >= kC6Ratio;
    o.summary = fmt("F1Tenth step latency: learned %.1f us, MPC (N=100, R=10) %.1f us, ratio %.1fx (>= %.0fx)",
                    stats[0].mean_step_us, stats[1].mean_step_us, ratio, kC6Ratio);
    o.detail = {{"learned_us", stats[0].mean_step_us}, {"mpc_us", stats[1].mean_step_us}, {"ratio", ratio}};
    return o;
}

// ---------------------------------------------------------------------------
// 7-9: MPC properties

Outcome c7(Context&)
{
    Outcome o(7);
    o.pass = true;
    std::vector<std::string> parts;
    for (const auto& name : system_names()) {
        auto sys = make_system(name);
        const MpcConfig mc = desk_preset(name).mpc;
        std::size_t bad = 0;
        for (int i = 0; i < kC7Points; ++i) {
            const auto key = static_cast<std::uint64_t>(i);
            RngStream rng(701, {key});
            const StateVec x = sys->sample_state(rng);
            const double t = rng.uniform(0.0, sys->horizon());
            const PointResult r = solve_point(*sys, mc, t, x, {}, nullptr, stream_key(701, {key, 1}));
            bool ok = static_cast<int>(r.round_best.size()) == mc.n_rounds && r.v_hat == r.round_best.back();
            for (std::size_t k = 1; k < r.round_best.size(); ++k) ok = ok && r.round_best[k] >= r.round_best[k - 1];
            bad += !ok;
        }
        o.pass = o.pass && bad == 0;
        o.detail[name] = {{"points", kC7Points}, {"violations", bad}};
        parts.push_back(name + " " + std::to_string(bad));
    }
    o.summary = fmt("MPC best score non-decreasing over R rounds on %d points per system; violations: %s", kC7Points,
                    (parts[0] + ", " + parts[1] + ", " + parts[2] + ", " + parts[3]).c_str());
    return o;
}

Outcome c8(Context&)
{
    Outcome o(8);
    o.pass = true;
    std::vector<std::string> parts;
    for (const auto& name : system_names()) {
        auto sys = make_system(name);
        MpcConfig mc;
        mc.seed = 801;
        // grow the number of sampled points until the dataset reaches the target size
        mc.dataset_size = 200;
        MpcDataset ds = generate(*sys, mc);
        while (ds.size() < kC8Samples) {
            const double per_point = std::max(1.0, static_cast<double>(ds.size()) / mc.dataset_size);
            mc.dataset_size = static_cast<int>(std::ceil(1.05 * kC8Samples / per_point)) + 1;
            ds = generate(*sys, mc);
        }
        std::map<std::uint32_t, std::vector<const MpcSample*>> chains;
        for (const auto& s : ds.samples) chains[s.chain].push_back(&s);
        std::size_t bad = 0, bootstrapped = 0;
        for (const auto& [id, chain] : chains) {
            bool ok = chain.front()->provenance == Provenance::Direct;
            for (std::size_t h = 0; h < chain.size(); ++h) {
                const MpcSample& s = *chain[h];
                const double l = sys->boundary_l(s.x);
                ok = ok && s.step == h && s.v_hat <= l;
                // running minimum: each label is the min of l here and the next label
                if (h + 1 < chain.size()) ok = ok && s.v_hat == std::min(l, chain[h + 1]->v_hat);
                if (h > 0) {
                    ok = ok && s.provenance == Provenance::Bootstrapped;
                    ++bootstrapped;
                }
            }
            bad += !ok;
        }
        o.pass = o.pass && bad == 0;
        o.detail[name] = {{"samples", ds.size()}, {"chains", chains.size()}, {"bootstrapped", bootstrapped},
                          {"bad_chains", bad}};
        parts.push_back(name + " " + std::to_string(bad) + "/" + std::to_string(chains.size()) + " (" +
                        std::to_string(ds.size()) + " samples)");
    }
    o.summary = "bootstrap running-min invariant, bad chains: " + parts[0] + ", " + parts[1] + ", " + parts[2] +
                ", " + parts[3];
    return o;
}

Outcome c9(Context& c)
{
    const GridValueFn& vf = drone_oracle(c);
    auto sys = make_system("vertical_drone");
    MpcConfig mc = drone_preset().mpc;
    mc.dataset_size = kC9Points;
    mc.bootstrap = false;
    mc.seed = 901;
    const MpcDataset ds = generate(*sys, mc);
    std::size_t ok = 0;
    double worst = -INFINITY;
    for (const auto& s : ds.samples) {
        const double gap = s.v_hat - vf.interpolate(s.x, s.t);
        ok += gap <= kC9Margin;
        worst = std::max(worst, gap);
    }
    const double frac = static_cast<double>(ok) / ds.size();

    // Diagnostic only: the same check with a 4x finer Euler step separates
    // integration error from sampling error. It does not enter the verdict.
    MpcConfig fine = mc;
    fine.dt = mc.dt / 4;
    const MpcDataset ds_fine = generate(*sys, fine);
    std::size_t ok_fine = 0;
    for (const auto& s : ds_fine.samples) ok_fine += s.v_hat - vf.interpolate(s.x, s.t) <= kC9Margin;
    const double frac_fine = static_cast<double>(ok_fine) / ds_fine.size();

    Outcome o(9);
    o.pass = ds.size() == static_cast<std::size_t>(kC9Points) && frac >= kC9Fraction;
    o.summary = fmt("MPC lower bound at dt %.3f: v_hat <= V_grid + %.2f on %.1f%% of %zu drone samples (>= %.0f%%), "
                    "worst excess %.3f; diagnostic at dt %.4f: %.1f%%",
                    mc.dt, kC9Margin, 100 * frac, ds.size(), 100 * kC9Fraction, worst, fine.dt, 100 * frac_fine);
    o.detail = {{"dt", mc.dt}, {"fraction", frac}, {"worst", worst}, {"samples", ds.size()},
                {"diagnostic_dt", fine.dt}, {"diagnostic_fraction", frac_fine}};
    return o;
}

// ---------------------------------------------------------------------------
// 10-12: network and grid properties

LossBatch random_batch(const SystemModel& sys, int n, std::uint64_t seed)
{
    RngStream rng(seed, {77});
    LossBatch b;
    b.x.resize(sys.state_dim(), n);
    b.t.resize(n);
    b.target.resize(n);
    for (int k = 0; k < n; ++k) {
        b.x.col(k) = sys.sample_state(rng);
        b.t[k] = rng.uniform(0.0, sys.horizon());
        b.target[k] = rng.uniform(-1.0, 1.0);
    }
    return b;
}

Outcome c10(Context&)
{
    double worst_input = 0.0, worst_param = 0.0;
    for (const auto& name : system_names()) {
        auto sys = make_system(name);
        NetConfig cfg;
        cfg.init_seed = 1001;
        ValueNet net(sys, cfg);
        RngStream rng(1002, {1});
        const int n = sys->state_dim();
        for (int k = 0; k < 100; ++k) {
            const StateVec x = sys->sample_state(rng);
            const double t = rng.uniform(0.0, sys->horizon());
            const ValueSample s = net.evaluate(x, t);
            for (int i = 0; i <= n; ++i) {
                const double h = 1e-5 / net.scaling().scale[i];
                double fd;
                if (i < n) {
                    StateVec xp = x, xm = x;
                    xp[i] += h;
                    xm[i] -= h;
                    // central differences of the network part; l contributes its analytic gradient
                    fd = (net.value(xp, t) - sys->boundary_l(xp) - net.value(xm, t) + sys->boundary_l(xm)) / (2 * h) +
                         sys->boundary_gradient(x)[i];
                } else {
                    fd = (net.value(x, t + h) - net.value(x, t - h)) / (2 * h);
                }
                const double an = i < n ? s.grad_x[i] : s.dv_dt;
                worst_input = std::max(worst_input, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
            }
        }

        NetConfig small;
        small.width = 8;
        small.init_seed = 1003;
        ValueNet tiny(sys, small);
        LossBatch b = random_batch(*sys, 6, 1004);
        Eigen::VectorXd v;
        tiny.values(b.x, b.t, v);
        b.target[0] = v[0] >= 0 ? -0.3 : v[0] - 0.2;   // a false positive for the fine-tune weighting
        b.target[1] = v[1] + 0.4;
        const Eigen::VectorXd p0 = tiny.params();
        for (LossKind kind : {LossKind::Pde, LossKind::DataFinetune}) {
            tiny.set_params(p0);
            const LossResult r = loss_gradients(tiny, b, kind);
            Eigen::VectorXd fd(p0.size());
            for (Eigen::Index i = 0; i < p0.size(); ++i) {
                Eigen::VectorXd p = p0;
                p[i] = p0[i] + 1e-6;
                tiny.set_params(p);
                const double up = loss_terms(tiny, b, kind).mean();
                p[i] = p0[i] - 1e-6;
                tiny.set_params(p);
                const double dn = loss_terms(tiny, b, kind).mean();
                fd[i] = (up - dn) / 2e-6;
            }
            tiny.set_params(p0);
            worst_param = std::max(worst_param, (r.grad - fd).norm() / std::max(1e-12, fd.norm()));
        }
    }
    Outcome o(10);
    o.pass = worst_input <= kC10Input && worst_param <= kC10Param;
    o.summary = fmt("gradient checks: input rel. err %.2e (<= %.0e, 100 points x 4 systems), parameter rel. err "
                    "%.2e (<= %.0e, PDE and fine-tune losses, width 8)",
                    worst_input, kC10Input, worst_param, kC10Param);
    o.detail = {{"input", worst_input}, {"param", worst_param}};
    return o;
}

Outcome c11(Context&)
{
    std::size_t exact = 0, total = 0;
    for (const auto& name : system_names()) {
        auto sys = make_system(name);
        NetConfig cfg;
        cfg.init_seed = 1101;
        ValueNet net(sys, cfg);
        RngStream rng(1102, {1});
        Eigen::VectorXd p = net.params();
        for (auto& w : p) w = rng.uniform(-3.0, 3.0);
        net.set_params(p);
        LossBatch b = random_batch(*sys, kC11Points, 1103);
        b.t.setConstant(sys->horizon());
        Eigen::VectorXd v;
        net.values(b.x, b.t, v);
        for (int k = 0; k < kC11Points; ++k) {
            exact += v[k] == sys->boundary_l(b.x.col(k));
            exact += net.value(b.x.col(k), sys->horizon()) == sys->boundary_l(b.x.col(k));
            total += 2;
        }
    }
    Outcome o(11);
    o.pass = exact == total;
    o.summary = fmt("boundary exactness V(x,T) == l(x): %zu / %zu exact (random parameters, %d states x 4 systems, "
                    "batched and single)",
                    exact, total, kC11Points);
    o.detail = {{"exact", exact}, {"total", total}};
    return o;
}

// xdot = -1, l(x) = x on [-3, 3]: V(x, t) = x - (T - t).
class Translate1D final : public SystemModel {
public:
    Translate1D()
        : SystemModel("translate1d", {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)},
                      {Eigen::VectorXd::Constant(1, -3.0), Eigen::VectorXd::Constant(1, 3.0)}, 1.0)
    {
    }
    void flow_into(std::span<const double>, std::span<const double>, std::span<double> xdot) const override
    {
        xdot[0] = -1.0;
    }
    double boundary_raw(std::span<const double> x) const override { return x[0]; }
    void boundary_gradient_into(std::span<const double>, std::span<double> g) const override { g[0] = 1.0; }
    StateVec drift(const StateVec&) const override { return Eigen::VectorXd::Constant(1, -1.0); }
    Eigen::MatrixXd input_matrix(const StateVec&) const override { return Eigen::MatrixXd::Zero(1, 1); }
};

Outcome c12(Context&)
{
    auto sys = std::make_shared<Translate1D>();
    Grid g = grid_for(*sys, {121});
    const GridValueFn vf = solve_vi(sys, g);
    const double dx = g.axes[0].spacing();
    RngStream rng(1201, {1});
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        StateVec x(1);
        x[0] = rng.uniform(-3.0, 3.0);
        const double t = rng.uniform(0.0, 1.0);
        worst = std::max(worst, std::abs(vf.interpolate(x, t) - (x[0] - (1.0 - t))));
    }
    Outcome o(12);
    o.pass = worst <= dx;
    o.summary = fmt("1D translation oracle V = x - (T - t): max error %.2e (<= dx = %.3f) on 1000 points", worst, dx);
    o.detail = {{"worst", worst}, {"dx", dx}};
    return o;
}

// ---------------------------------------------------------------------------
// 13-15

Outcome c13(Context&)
{
    const std::size_t m = 5000;
    const auto accept_rate = [&](double p, std::uint64_t tag) {
        int accepted = 0;
        for (int trial = 0; trial < kC13Trials; ++trial) {
            RngStream rng(1301, {tag, static_cast<std::uint64_t>(trial)});
            std::vector<CalibrationSample> s(m);
            for (auto& cs : s) {
                cs.score = rng.uniform(1e-6, 1.0);
                cs.unsafe = rng.uniform(0.0, 1.0) < p;
            }
            accepted += search_delta(s, kC13Eps, kC13Beta).delta == 0.0;
        }
        return accepted / double(kC13Trials);
    };
    const double slack = 3.0 * std::sqrt(kC13Beta * (1 - kC13Beta) / kC13Trials);
    const double a0 = accept_rate(0.0, 1), a_low = accept_rate(kC13Eps / 10, 2), a_eps = accept_rate(kC13Eps, 3);
    const double reject = 1.0 - accept_rate(10 * kC13Eps, 4);
    Outcome o(13);
    o.pass = a0 >= 1 - kC13Beta - slack && a_low >= 1 - kC13Beta - slack && reject >= 0.99 &&
             a_eps <= kC13Beta + slack;
    o.summary = fmt("Bernoulli calibration (m=%zu, eps=%.2f, beta=%.0e, %d trials): accept delta=0 at p=0 %.3f, "
                    "p=eps/10 %.3f (>= %.4f); reject at p=10 eps %.3f (>= 0.99); accept at p=eps %.4f (<= %.4f)",
                    m, kC13Eps, kC13Beta, kC13Trials, a0, a_low, 1 - kC13Beta - slack, reject, a_eps,
                    kC13Beta + slack);
    o.detail = {{"accept_p0", a0}, {"accept_eps_over_10", a_low}, {"reject_10eps", reject}, {"accept_eps", a_eps}};
    return o;
}

// Nearest feasible point of {u in box : c + a.u >= 0} to u_nom (u_nom inside the box).
// If u_nom violates the constraint the minimiser lies on the line c + a.u = 0: any
// feasible point strictly inside the half-plane could move towards u_nom. The line
// segment inside the box is searched on a dense grid with repeated zooming, which
// is safe because the squared distance is a convex quadratic along the line.
std::optional<Eigen::Vector2d> grid_qp(const ControlBounds& box, const Eigen::Vector2d& a, double c,
                                       const Eigen::Vector2d& u_nom)
{
    if (c + a.dot(u_nom) >= 0) return u_nom;
    if (a.norm() == 0.0) return std::nullopt;
    const Eigen::Vector2d p0 = -c * a / a.squaredNorm();
    const Eigen::Vector2d d(-a[1] / a.norm(), a[0] / a.norm());
    double s_lo = -INFINITY, s_hi = INFINITY;
    for (int i = 0; i < 2; ++i) {
        if (d[i] == 0.0) {
            if (p0[i] < box.lo[i] || p0[i] > box.hi[i]) return std::nullopt;
            continue;
        }
        const double s1 = (box.lo[i] - p0[i]) / d[i], s2 = (box.hi[i] - p0[i]) / d[i];
        s_lo = std::max(s_lo, std::min(s1, s2));
        s_hi = std::min(s_hi, std::max(s1, s2));
    }
    if (s_lo > s_hi) return std::nullopt;
    const int n = 2000;
    double lo = s_lo, hi = s_hi, best = s_lo;
    for (int level = 0; level < 8; ++level) {
        const double h = (hi - lo) / n;
        double best_d = INFINITY;
        for (int i = 0; i <= n; ++i) {
            const double sv = lo + h * i;
            const double dist = (p0 + sv * d - u_nom).squaredNorm();
            if (dist < best_d) best_d = dist, best = sv;
        }
        lo = std::max(s_lo, best - 2 * h);
        hi = std::min(s_hi, best + 2 * h);
    }
    return Eigen::Vector2d((p0 + best * d).cwiseMax(box.lo).cwiseMin(box.hi));
}

Outcome c14(Context&)
{
    auto sys = make_system("f1tenth7d");
    RngStream rng(1401, {1});
    double worst = 0.0, worst_res = 0.0;
    std::size_t feasible = 0, modified = 0, mismatched_feasibility = 0;
    for (int k = 0; k < kC14Instances; ++k) {
        const StateVec x = sys->sample_state(rng);
        ValueSample vs;
        vs.v = rng.uniform(-0.5, 1.0);
        vs.dv_dt = rng.uniform(-1.0, 1.0);
        vs.grad_x.resize(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) vs.grad_x[i] = rng.normal();
        const ControlBounds box = sys->effective_bounds(x);
        ControlVec u_nom(2);
        for (int i = 0; i < 2; ++i) u_nom[i] = rng.uniform(box.lo[i], box.hi[i]);
        const double gamma = 1.0;
        const FilterResult f = safety_filter(*sys, vs, u_nom, x, gamma);
        const Eigen::Vector2d a = sys->input_matrix(x).transpose() * vs.grad_x;
        const double cst = vs.grad_x.dot(sys->drift(x)) + vs.dv_dt + gamma * vs.v;
        const auto ref = grid_qp(box, a, cst, u_nom);
        if (ref.has_value() != f.feasible) {
            ++mismatched_feasibility;
            continue;
        }
        if (!f.feasible) continue;
        ++feasible;
        modified += f.modified;
        worst = std::max(worst, (f.u - *ref).lpNorm<Eigen::Infinity>());
        worst_res = std::max(worst_res, std::max(0.0, -(cst + a.dot(f.u))));
    }
    Outcome o(14);
    o.pass = mismatched_feasibility == 0 && worst <= kC14Match && worst_res <= kC14Residual && modified > 0;
    o.summary = fmt("safety filter vs constraint-line grid search on %d F1Tenth instances (%zu feasible, %zu modified): max "
                    "deviation %.2e (<= %.0e), constraint residual %.1e (<= %.0e), feasibility disagreements %zu",
                    kC14Instances, feasible, modified, worst, kC14Match, worst_res, kC14Residual,
                    mismatched_feasibility);
    o.detail = {{"worst", worst}, {"residual", worst_res}, {"feasible", feasible}, {"modified", modified},
                {"feasibility_mismatch", mismatched_feasibility}};
    return o;
}

std::string slurp(const fs::path& p) { return read_text(p.string()); }

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "reachguide");
    args.push_back("--quiet");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

Outcome c15(Context& c)
{
    const int saved = thread_count();
    const fs::path dir = c.work / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "config.json";
    write_text_atomic(cfg.string(), R"({"preset": "drone_desk", "mpc": {"dataset_size": 60}})");
    bool gen_ok = true;
    for (const char* threads : {"1", "8"})
        gen_ok = gen_ok && cli({"--seed", "15", "--threads", threads, "gen-data", "--config", cfg.string(), "--out",
                                (dir / (std::string("gen_") + threads)).string()}) == kExitOk;
    gen_ok = gen_ok && slurp(dir / "gen_1" / "dataset.jsonl") == slurp(dir / "gen_8" / "dataset.jsonl");

    ExperimentPreset p = drone_preset();
    p.set_seed(15);
    p.mpc.dataset_size = 40;
    p.train.pretrain_steps = 100;
    p.train.curriculum_steps = 400;
    p.train.finetune = false;
    p.train.n_pde = 512;
    p.train.n_mpc = 256;
    auto sys = make_system(p.system);
    std::vector<TrainResult> results;
    for (int threads : {1, 8}) {
        set_thread_count(threads);
        results.push_back(train_full(sys, p.train, p.mpc, p.net));
    }
    set_thread_count(saved);
    const auto& a = results[0];
    const auto& b = results[1];
    bool train_ok = a.net->params() == b.net->params() && a.adam.m == b.adam.m && a.adam.v == b.adam.v &&
                    a.report.rows.size() == b.report.rows.size() && a.report.refinements.size() == b.report.refinements.size();
    for (std::size_t i = 0; train_ok && i < a.report.rows.size(); ++i)
        train_ok = a.report.rows[i].l_data == b.report.rows[i].l_data && a.report.rows[i].l_pde == b.report.rows[i].l_pde;
    const std::int64_t steps = a.report.rows.empty() ? 0 : a.report.rows.back().step;
    Outcome o(15);
    o.pass = gen_ok && train_ok && steps == 500;
    o.summary = fmt("determinism across threads {1, 8}: gen-data files %s, %lld-step training %s",
                    gen_ok ? "identical" : "DIFFER", static_cast<long long>(steps), train_ok ? "bit-identical" : "DIFFERS");
    o.detail = {{"gen_data", gen_ok}, {"training", train_ok}, {"steps", steps}};
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    Context ctx;
    ctx.work = fs::temp_directory_path() / "reachguide_acceptance";
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--work" && i + 1 < argc) ctx.work = argv[++i];
        else if (a == "--reuse") ctx.reuse = true;
        else only.insert(std::stoi(a));
    }
    fs::create_directories(ctx.work);
    set_thread_count(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    init_threads_from_env();
    std::printf("acceptance: work dir %s, %d thread(s)\n", ctx.work.string().c_str(), thread_count());

    using Fn = Outcome (*)(Context&);
    // 9 and 1 share the grid oracle; the order keeps the training runs last.
    const std::vector<std::pair<int, Fn>> all = {{1, c1},   {6, c6},   {7, c7},   {8, c8},   {9, c9},
                                                 {10, c10}, {11, c11}, {12, c12}, {13, c13}, {14, c14},
                                                 {15, c15}, {2, c2},   {3, c3},   {4, c4},   {5, c5}};
    std::map<int, Outcome> results;
    for (const auto& [id, fn] : all) {
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn(ctx);
        } catch (const std::exception& e) {
            o = Outcome(id);
            o.summary = std::string("error: ") + e.what();
        }
        o.detail["seconds"] = since(t0);
        std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.summary.c_str());
        std::fflush(stdout);
        results[id] = o;
    }

    std::printf("\nsummary\n");
    int failed = 0;
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [id, o] : results) {
        std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.summary.c_str());
        failed += !o.pass;
        out[std::to_string(id)] = {{"pass", o.pass}, {"summary", o.summary}, {"detail", o.detail}};
    }
    write_text_atomic((ctx.work / "acceptance.json").string(), out.dump(2) + "\n");
    std::printf("%zu criteria, %d failed; details in %s\n", results.size(), failed,
                (ctx.work / "acceptance.json").string().c_str());
    return failed == 0 ? 0 : 1;
}
