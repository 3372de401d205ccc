#include "reachguide/mpcgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <set>

namespace reachguide {

void MpcConfig::validate() const
{
    if (n_trajectories < 2) throw ConfigError("mpc: n_trajectories must be >= 2");
    if (n_rounds < 1) throw ConfigError("mpc: n_rounds must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("mpc: dt must be positive");
    if (!(sigma > 0.0)) throw ConfigError("mpc: sigma must be positive");
    if (!(anneal > 0.0)) throw ConfigError("mpc: anneal must be positive");
    if (!(noise_correlation >= 0.0 && noise_correlation < 1.0)) throw ConfigError("mpc: noise_correlation must be in [0, 1)");
    if (dataset_size < 1) throw ConfigError("mpc: dataset_size must be >= 1");
}

void to_json(nlohmann::json& j, const MpcConfig& c)
{
    j = {{"n_trajectories", c.n_trajectories}, {"n_rounds", c.n_rounds}, {"dt", c.dt},
         {"sigma", c.sigma}, {"anneal", c.anneal}, {"noise_correlation", c.noise_correlation}, {"dataset_size", c.dataset_size},
         {"horizon_cap", c.horizon_cap}, {"bootstrap", c.bootstrap}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, MpcConfig& c)
{
    static const std::set<std::string> known{"n_trajectories", "n_rounds", "dt", "sigma", "anneal", "noise_correlation",
                                             "dataset_size", "horizon_cap", "bootstrap", "seed"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("mpc config: unknown key '" + key + "'");
    try {
        c.n_trajectories = j.value("n_trajectories", c.n_trajectories);
        c.n_rounds = j.value("n_rounds", c.n_rounds);
        c.dt = j.value("dt", c.dt);
        c.sigma = j.value("sigma", c.sigma);
        c.anneal = j.value("anneal", c.anneal);
        c.noise_correlation = j.value("noise_correlation", c.noise_correlation);
        c.dataset_size = j.value("dataset_size", c.dataset_size);
        c.horizon_cap = j.value("horizon_cap", c.horizon_cap);
        c.bootstrap = j.value("bootstrap", c.bootstrap);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mpc config: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

void TerminalCost::evaluate_batch(double t, const Eigen::MatrixXd& xs, Eigen::VectorXd& out) const
{
    out.resize(xs.cols());
    for (Eigen::Index k = 0; k < xs.cols(); ++k) out[k] = evaluate(t, xs.col(k));
}

// A state outside the value's domain is queried at its projection onto the
// domain and capped by its own l, since V <= l holds everywhere.
double ValueTerminal::evaluate(double t, const StateVec& x) const
{
    const SystemModel& sys = value_.system();
    const StateBox box = value_.domain();
    if (box.contains(x)) return value_.value(x, t);
    return std::min(value_.value(x.cwiseMax(box.lo).cwiseMin(box.hi), t), sys.boundary_l(x));
}

void ValueTerminal::evaluate_batch(double t, const Eigen::MatrixXd& xs, Eigen::VectorXd& out) const
{
    const SystemModel& sys = value_.system();
    const StateBox box = value_.domain();
    const Eigen::MatrixXd clamped = xs.cwiseMax(box.lo.replicate(1, xs.cols())).cwiseMin(box.hi.replicate(1, xs.cols()));
    value_.values(clamped, Eigen::VectorXd::Constant(xs.cols(), t), out);
    for (Eigen::Index k = 0; k < xs.cols(); ++k)
        if (!box.contains(xs.col(k))) out[k] = std::min(out[k], sys.boundary_l(xs.col(k)));
}

// ---------------------------------------------------------------------------

int horizon_steps(const SystemModel& system, const MpcConfig& config, double t, double horizon)
{
    double span = system.horizon() - t;
    if (config.horizon_cap > 0.0) span = std::min(span, config.horizon_cap);
    if (horizon > 0.0) span = std::min(span, horizon);
    return std::max(0, static_cast<int>(std::lround(span / config.dt)));
}

namespace {

// Rolls one control sequence; returns min_h l(xi_h) and writes the final state.
double rollout_score(const SystemModel& system, const double* x0, const double* controls, int steps, double dt,
                     double* work_a, double* work_b, double* final_state, SystemModel::StepScratch& scratch,
                     bool& finite)
{
    const std::size_t n = static_cast<std::size_t>(system.state_dim());
    const std::size_t m = static_cast<std::size_t>(system.control_dim());
    std::copy(x0, x0 + n, work_a);
    double low = system.boundary_raw({work_a, n});
    finite = true;
    for (int h = 0; h < steps; ++h) {
        if (!system.step_euler_into({work_a, n}, {controls + h * m, m}, dt, {work_b, n}, scratch)) {
            finite = false;
            return low;
        }
        std::swap(work_a, work_b);
        low = std::min(low, system.boundary_raw({work_a, n}));
    }
    std::copy(work_a, work_a + n, final_state);
    return low;
}

} // namespace

PointResult solve_point(const SystemModel& system, const MpcConfig& config, double t, const StateVec& x,
                        const std::vector<ControlVec>& u_nom, const TerminalCost* terminal, std::uint64_t stream,
                        double horizon)
{
    config.validate();
    if (x.size() != system.state_dim()) throw ContractViolation("solve_point: state dimension mismatch");
    const int H = horizon_steps(system, config, t, horizon);
    const int n = system.state_dim();
    const int m = system.control_dim();
    const ControlBounds& box = system.control_bounds();
    const double T = system.horizon();

    PointResult res;
    res.best.t0 = t;
    res.best.dt = config.dt;
    res.best.states.push_back(x);
    if (H == 0) {
        res.v_hat = system.boundary_l(x);
        res.boundary = {res.v_hat};
        res.running_min = {res.v_hat};
        res.round_best.assign(static_cast<std::size_t>(config.n_rounds), res.v_hat);
        return res;
    }
    if (!u_nom.empty() && static_cast<int>(u_nom.size()) < H)
        throw ContractViolation("solve_point: nominal sequence shorter than the horizon");

    const std::size_t seq_len = static_cast<std::size_t>(H) * m;
    std::vector<double> nominal(seq_len);
    for (int h = 0; h < H; ++h) {
        const ControlVec u = u_nom.empty() ? box.mid() : box.clamp(u_nom[static_cast<std::size_t>(h)]);
        for (int j = 0; j < m; ++j) nominal[static_cast<std::size_t>(h) * m + j] = u[j];
    }
    const bool use_terminal = terminal != nullptr && t + H * config.dt < T - 1e-9;
    const double t_end = std::min(T, t + H * config.dt);

    const int N = config.n_trajectories;
    std::vector<double> seqs(static_cast<std::size_t>(N) * seq_len);
    std::vector<double> scores(static_cast<std::size_t>(N));
    Eigen::MatrixXd finals(n, N);
    std::vector<double> wa(static_cast<std::size_t>(n)), wb(static_cast<std::size_t>(n)), fin(static_cast<std::size_t>(n));
    auto scratch = system.make_scratch();
    const Eigen::VectorXd range = box.range();
    const double rho = config.noise_correlation;
    const double innovation = std::sqrt(1.0 - rho * rho);
    std::vector<double> noise(static_cast<std::size_t>(m));

    double best_score = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < config.n_rounds; ++r) {
        const double sig = config.sigma * std::pow(config.anneal, r);
        std::copy(nominal.begin(), nominal.end(), seqs.begin());
        for (int k = 1; k < N; ++k) {
            RngStream rng(stream, {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(k)});
            double* s = seqs.data() + static_cast<std::size_t>(k) * seq_len;
            // AR(1) noise with unit marginal variance along the horizon
            for (int j = 0; j < m; ++j) noise[static_cast<std::size_t>(j)] = rng.normal();
            for (int h = 0; h < H; ++h)
                for (int j = 0; j < m; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(h) * m + j;
                    double& e = noise[static_cast<std::size_t>(j)];
                    if (h > 0) e = rho * e + innovation * rng.normal();
                    s[idx] = std::clamp(nominal[idx] + sig * range[j] * e, box.lo[j], box.hi[j]);
                }
        }
        // the retained nominal keeps its score from the previous round
        const int first = r == 0 ? 0 : 1;
        for (int k = first; k < N; ++k) {
            bool finite = true;
            scores[static_cast<std::size_t>(k)] =
                rollout_score(system, x.data(), seqs.data() + static_cast<std::size_t>(k) * seq_len, H, config.dt,
                              wa.data(), wb.data(), fin.data(), scratch, finite);
            if (!finite)
                throw NumericError("mpc rollout diverged (round " + std::to_string(r) + ", sequence " +
                                   std::to_string(k) + ") from " + format_vector(x));
            for (int i = 0; i < n; ++i) finals(i, k) = fin[static_cast<std::size_t>(i)];
        }
        if (use_terminal) {
            Eigen::VectorXd tv;
            const Eigen::MatrixXd fresh = finals.rightCols(N - first);
            terminal->evaluate_batch(t_end, fresh, tv);
            for (int k = first; k < N; ++k) {
                const double v = tv[k - first];
                if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
                    throw NumericError("mpc terminal cost is not finite (round " + std::to_string(r) +
                                       ", sequence " + std::to_string(k) + ")");
                scores[static_cast<std::size_t>(k)] = std::min(scores[static_cast<std::size_t>(k)], v);
            }
        }
        if (r > 0) scores[0] = best_score;
        int arg = 0;
        for (int k = 1; k < N; ++k)
            if (scores[static_cast<std::size_t>(k)] > scores[static_cast<std::size_t>(arg)]) arg = k;
        best_score = scores[static_cast<std::size_t>(arg)];
        if (arg != 0) {
            std::copy_n(seqs.begin() + static_cast<std::ptrdiff_t>(arg * seq_len), seq_len, nominal.begin());
            finals.col(0) = finals.col(arg);
        }
        res.round_best.push_back(best_score);
    }

    // replay the winner to record its trajectory
    std::vector<double> ls{system.boundary_l(x)};
    StateVec cur = x, next(n);
    for (int h = 0; h < H; ++h) {
        ControlVec u = Eigen::Map<const Eigen::VectorXd>(nominal.data() + static_cast<std::size_t>(h) * m, m);
        system.step_euler_into({cur.data(), static_cast<std::size_t>(n)}, {u.data(), static_cast<std::size_t>(m)},
                               config.dt, {next.data(), static_cast<std::size_t>(n)}, scratch);
        cur.swap(next);
        res.best.controls.push_back(u);
        res.best.states.push_back(cur);
        ls.push_back(system.boundary_raw({cur.data(), static_cast<std::size_t>(n)}));
    }
    res.boundary = ls;
    res.running_min.assign(ls.size(), 0.0);
    double run = std::numeric_limits<double>::infinity();
    if (use_terminal) {
        run = terminal->evaluate(t_end, cur);
        res.terminal_applied = true;
    }
    for (std::size_t h = ls.size(); h-- > 0;) {
        run = std::min(run, ls[h]);
        res.running_min[h] = run;
    }
    res.v_hat = best_score;
    return res;
}

std::size_t bootstrap_end(const PointResult& result)
{
    // first index of the overall minimum; a binding terminal cost counts as the last state
    const double lowest = result.running_min.front();
    for (std::size_t h = 0; h < result.boundary.size(); ++h)
        if (result.boundary[h] == lowest) return h;
    return result.boundary.size() - 1;
}

std::vector<ControlVec> policy_nominal(const SystemModel& system, const ValueFunction& value, double t,
                                       const StateVec& x, double dt, int steps)
{
    std::vector<ControlVec> seq;
    seq.reserve(static_cast<std::size_t>(std::max(steps, 0)));
    const StateBox box = value.domain();
    StateVec cur = x;
    for (int h = 0; h < steps; ++h) {
        const StateVec query = cur.cwiseMax(box.lo).cwiseMin(box.hi);
        const double tq = std::min(system.horizon(), t + h * dt);
        const ControlVec u = system.hamiltonian_control(query, value.evaluate(query, tq).grad_x);
        seq.push_back(system.control_bounds().clamp(u));
        cur = system.step_euler(cur, u, dt);
    }
    return seq;
}

// ---------------------------------------------------------------------------

std::string dataset_fingerprint(const std::string& system, const MpcConfig& config, const GenerateOptions& options)
{
    nlohmann::json j;
    j["system"] = system;
    j["mpc"] = config;
    j["t_lo"] = options.t_lo;
    j["horizon"] = options.horizon;
    j["guided"] = options.policy != nullptr;
    j["terminal"] = options.terminal != nullptr;
    j["stream"] = options.stream;
    return digest_string(j.dump());
}

MpcDataset generate(const SystemModel& system, const MpcConfig& config, const GenerateOptions& options)
{
    config.validate();
    const double T = system.horizon();
    if (!(options.t_lo >= 0.0 && options.t_lo < T)) throw ConfigError("mpc: sampling window start outside [0, T)");
    if (!((system.state_box().hi - system.state_box().lo).array() > 0.0).all())
        throw ConfigError("mpc: empty state box");

    const auto points = static_cast<std::size_t>(config.dataset_size);
    std::vector<std::vector<MpcSample>> per_point(points);
    std::unique_ptr<ValueTerminal> terminal;
    if (options.terminal) terminal = std::make_unique<ValueTerminal>(*options.terminal);

    parallel_for(points, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            RngStream rng(config.seed, {tag(StreamTag::MpcPoint), options.stream, i});
            const double t = rng.uniform(options.t_lo, T);
            const StateVec x = system.sample_state(rng);
            const int H = horizon_steps(system, config, t, options.horizon);
            std::vector<ControlVec> nominal;
            if (options.policy) nominal = policy_nominal(system, *options.policy, t, x, config.dt, H);
            const std::uint64_t key = stream_key(config.seed, {tag(StreamTag::MpcPerturb), options.stream, i});
            const PointResult res = solve_point(system, config, t, x, nominal, terminal.get(), key, options.horizon);

            auto& out = per_point[i];
            const auto chain = static_cast<std::uint32_t>(i);
            out.push_back({t, x, res.v_hat, options.direct, chain, 0});
            if (!config.bootstrap || res.best.controls.empty()) continue;
            const std::size_t arg = bootstrap_end(res);
            for (std::size_t h = 1; h <= arg; ++h) {
                const double th = t + static_cast<double>(h) * config.dt;
                if (th > T + 1e-9) break;
                if (!system.state_box().contains(res.best.states[h])) break;
                out.push_back({std::min(th, T), res.best.states[h], res.running_min[h], Provenance::Bootstrapped, chain,
                               static_cast<std::uint32_t>(h)});
            }
        }
    });

    MpcDataset ds;
    ds.system = system.name();
    ds.dt = config.dt;
    double eff = T;
    if (config.horizon_cap > 0.0) eff = std::min(eff, config.horizon_cap);
    if (options.horizon > 0.0) eff = std::min(eff, options.horizon);
    ds.effective_horizon = eff;
    ds.fingerprint = dataset_fingerprint(system.name(), config, options);
    for (auto& v : per_point)
        for (auto& s : v) ds.samples.push_back(std::move(s));
    return ds;
}

MpcDataset refine(const SystemModel& system, const MpcConfig& config, const ValueFunction& value, double t_r,
                  double h_r, std::uint64_t event)
{
    if (!(h_r > 0.0)) throw ConfigError("refine: H_R must be positive");
    if (t_r - h_r < -1e-9) throw ContractViolation("refine: requires t_R >= H_R");
    GenerateOptions opt;
    opt.t_lo = std::max(0.0, t_r - h_r);
    opt.horizon = h_r;
    opt.policy = &value;
    opt.terminal = &value;
    opt.direct = Provenance::Refined;
    opt.stream = (tag(StreamTag::Refine) << 32) | event;
    return generate(system, config, opt);
}

// ---------------------------------------------------------------------------
// Files

namespace {

const char* prov_name(Provenance p)
{
    switch (p) {
    case Provenance::Direct: return "direct";
    case Provenance::Bootstrapped: return "bootstrapped";
    case Provenance::Refined: return "refined";
    }
    return "direct";
}

Provenance prov_from(const std::string& s)
{
    if (s == "direct") return Provenance::Direct;
    if (s == "bootstrapped") return Provenance::Bootstrapped;
    if (s == "refined") return Provenance::Refined;
    throw IoError("unknown sample provenance '" + s + "'");
}

nlohmann::json dataset_header(const MpcDataset& ds, const char* format)
{
    return {{"format", format}, {"format_version", 1}, {"system", ds.system}, {"fingerprint", ds.fingerprint},
            {"dt", ds.dt}, {"effective_horizon", ds.effective_horizon}, {"count", ds.samples.size()},
            {"tool_version", kToolVersion}};
}

MpcDataset dataset_from_header(const nlohmann::json& h, const std::string& format, const std::string& path)
{
    if (h.value("format", "") != format) throw IoError("not a " + format + " file: " + path);
    if (h.value("format_version", 0) != 1) throw IoError("unsupported dataset format version in " + path);
    MpcDataset ds;
    ds.system = h.at("system").get<std::string>();
    ds.fingerprint = h.at("fingerprint").get<std::string>();
    ds.dt = h.at("dt").get<double>();
    ds.effective_horizon = h.at("effective_horizon").get<double>();
    return ds;
}

nlohmann::json parse_line(const std::string& line, const std::string& path)
{
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt dataset line in " + path + ": " + e.what());
    }
}

} // namespace

void MpcDataset::save_jsonl(const std::string& path) const
{
    std::string text = dataset_header(*this, "reachguide-dmpc-jsonl").dump() + "\n";
    for (const auto& s : samples) {
        nlohmann::json j = {{"t", s.t},
                            {"x", std::vector<double>(s.x.data(), s.x.data() + s.x.size())},
                            {"v", s.v_hat},
                            {"prov", prov_name(s.provenance)},
                            {"chain", s.chain},
                            {"h", s.step}};
        text += j.dump();
        text += '\n';
    }
    write_text_atomic(path, text);
}

MpcDataset MpcDataset::load_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);
    std::string line;
    std::getline(in, line);
    const nlohmann::json h = parse_line(line, path);
    MpcDataset ds = dataset_from_header(h, "reachguide-dmpc-jsonl", path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = parse_line(line, path);
        try {
            const auto x = j.at("x").get<std::vector<double>>();
            ds.samples.push_back({j.at("t").get<double>(), Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())),
                                  j.at("v").get<double>(), prov_from(j.at("prov").get<std::string>()),
                                  j.at("chain").get<std::uint32_t>(), j.at("h").get<std::uint32_t>()});
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed dataset sample in " + path + ": " + e.what());
        }
    }
    if (ds.samples.size() != h.at("count").get<std::size_t>()) throw IoError("dataset sample count mismatch in " + path);
    return ds;
}

void MpcDataset::save_binary(const std::string& path) const
{
    const std::size_t n = samples.empty() ? 0 : static_cast<std::size_t>(samples.front().x.size());
    nlohmann::json h = dataset_header(*this, "reachguide-dmpc-bin");
    h["state_dim"] = n;
    std::string text = h.dump() + "\n";
    std::vector<double> rec(5 + n);
    for (const auto& s : samples) {
        if (static_cast<std::size_t>(s.x.size()) != n) throw ContractViolation("dataset mixes state dimensions");
        rec[0] = s.t;
        rec[1] = s.v_hat;
        rec[2] = static_cast<double>(s.provenance);
        rec[3] = static_cast<double>(s.chain);
        rec[4] = static_cast<double>(s.step);
        std::copy(s.x.data(), s.x.data() + n, rec.begin() + 5);
        text.append(reinterpret_cast<const char*>(rec.data()), rec.size() * sizeof(double));
    }
    write_text_atomic(path, text);
}

MpcDataset MpcDataset::load_binary(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset: " + path);
    std::string line;
    std::getline(in, line);
    const nlohmann::json h = parse_line(line, path);
    MpcDataset ds = dataset_from_header(h, "reachguide-dmpc-bin", path);
    const auto n = h.at("state_dim").get<std::size_t>();
    const auto count = h.at("count").get<std::size_t>();
    std::vector<double> rec(5 + n);
    for (std::size_t k = 0; k < count; ++k) {
        in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(rec.size() * sizeof(double)));
        if (!in) throw IoError("truncated dataset payload in " + path);
        const int prov = static_cast<int>(rec[2]);
        if (prov < 0 || prov > 2) throw IoError("corrupt provenance in " + path);
        ds.samples.push_back({rec[0], Eigen::Map<const Eigen::VectorXd>(rec.data() + 5, static_cast<Eigen::Index>(n)),
                              rec[1], static_cast<Provenance>(prov), static_cast<std::uint32_t>(rec[3]),
                              static_cast<std::uint32_t>(rec[4])});
    }
    return ds;
}

MpcDataset MpcDataset::load(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset: " + path);
    std::string line;
    std::getline(in, line);
    const nlohmann::json h = parse_line(line, path);
    const std::string format = h.value("format", "");
    if (format == "reachguide-dmpc-jsonl") return load_jsonl(path);
    if (format == "reachguide-dmpc-bin") return load_binary(path);
    throw IoError("unrecognised dataset format in " + path);
}

} // namespace reachguide
