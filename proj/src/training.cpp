#include "reachguide/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace reachguide {

namespace {

enum Phase : std::uint64_t { kPretrain = 1, kCurriculum = 2, kFinetune = 3 };

double now_ms()
{
    using namespace std::chrono;
    return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

} // namespace

void TrainConfig::validate(double horizon) const
{
    if (n_pde < 1 || n_mpc < 1) throw ConfigError("train: batch sizes must be >= 1");
    if (pretrain_steps < 0 || curriculum_steps < 0 || finetune_steps < 0)
        throw ConfigError("train: step counts must be >= 0");
    if (!(lr > 0.0) || !(finetune_lr_scale > 0.0)) throw ConfigError("train: learning rates must be positive");
    if (!(lambda_fp >= 1.0)) throw ConfigError("train: lambda_fp must be >= 1");
    if (!(h_r > 0.0) || h_r > horizon) throw ConfigError("train: h_r must lie in (0, T]");
    if (log_every < 1) throw ConfigError("train: log_every must be >= 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c)
{
    j = {{"n_pde", c.n_pde},
         {"n_mpc", c.n_mpc},
         {"pretrain_steps", c.pretrain_steps},
         {"curriculum_steps", c.curriculum_steps},
         {"finetune_steps", c.finetune_steps},
         {"lr", c.lr},
         {"finetune_lr_scale", c.finetune_lr_scale},
         {"lambda_fp", c.lambda_fp},
         {"h_r", c.h_r},
         {"pretrain", c.pretrain},
         {"curriculum", c.curriculum},
         {"time_curriculum", c.time_curriculum},
         {"refine", c.refine},
         {"finetune", c.finetune},
         {"filter_by_time", c.filter_by_time},
         {"log_every", c.log_every},
         {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c)
{
    nlohmann::json defaults;
    to_json(defaults, c);
    for (const auto& [key, _] : j.items())
        if (!defaults.contains(key)) throw ConfigError("train config: unknown key '" + key + "'");
    try {
        c.n_pde = j.value("n_pde", c.n_pde);
        c.n_mpc = j.value("n_mpc", c.n_mpc);
        c.pretrain_steps = j.value("pretrain_steps", c.pretrain_steps);
        c.curriculum_steps = j.value("curriculum_steps", c.curriculum_steps);
        c.finetune_steps = j.value("finetune_steps", c.finetune_steps);
        c.lr = j.value("lr", c.lr);
        c.finetune_lr_scale = j.value("finetune_lr_scale", c.finetune_lr_scale);
        c.lambda_fp = j.value("lambda_fp", c.lambda_fp);
        c.h_r = j.value("h_r", c.h_r);
        c.pretrain = j.value("pretrain", c.pretrain);
        c.curriculum = j.value("curriculum", c.curriculum);
        c.time_curriculum = j.value("time_curriculum", c.time_curriculum);
        c.refine = j.value("refine", c.refine);
        c.finetune = j.value("finetune", c.finetune);
        c.filter_by_time = j.value("filter_by_time", c.filter_by_time);
        c.log_every = j.value("log_every", c.log_every);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
}

double update_lambda(double lambda, double pde_grad_norm, double data_grad_norm)
{
    if (!(data_grad_norm > 0.0)) return lambda;
    return 0.9 * lambda + 0.1 * pde_grad_norm / data_grad_norm;
}

double curriculum_time(double horizon, int n, int steps)
{
    if (steps < 1 || n < 1 || n > steps) throw ContractViolation("curriculum_time: step out of range");
    return horizon * static_cast<double>(steps - n) / static_cast<double>(steps);
}

// ---------------------------------------------------------------------------

void TrainReport::save_csv(const std::string& path) const
{
    std::string text = "step,phase,l_data,l_pde,lambda,t_window,wall_ms\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%lld,%s,%.17g,%.17g,%.17g,%.17g,%.3f\n", static_cast<long long>(r.step),
                      r.phase.c_str(), r.l_data, r.l_pde, r.lambda, r.t_window, r.wall_ms);
        text += buf;
    }
    write_text_atomic(path, text);
}

nlohmann::json TrainReport::summary() const
{
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : refinements) events.push_back({{"step", e.step}, {"t_r", e.t_r}, {"samples", e.samples}});
    return {{"refinements", events},
            {"skipped", skipped},
            {"wall_seconds", wall_seconds},
            {"final_lambda", final_lambda},
            {"final_loss", final_loss},
            {"steps", rows.empty() ? 0 : rows.back().step},
            {"checkpoint", checkpoint}};
}

// ---------------------------------------------------------------------------

Trainer::Trainer(SystemPtr sys, TrainConfig cfg, MpcConfig mpc_cfg, NetConfig net_config)
    : system(std::move(sys)), config(cfg), mpc(mpc_cfg)
{
    config.validate(system->horizon());
    mpc.validate();
    net = std::make_shared<ValueNet>(system, net_config);
    adam = AdamState::for_net(*net, config.lr);
}

LossBatch Trainer::sample_data(double t, std::uint64_t phase_tag, std::uint64_t n) const
{
    std::vector<std::size_t> eligible;
    eligible.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (!config.filter_by_time || dataset.samples[i].t >= t - 1e-12) eligible.push_back(i);
    LossBatch b;
    b.x.resize(system->state_dim(), eligible.empty() ? 0 : static_cast<Eigen::Index>(n));
    b.t.resize(b.x.cols());
    b.target.resize(b.x.cols());
    if (eligible.empty()) return b;
    RngStream rng(config.seed, {tag(StreamTag::TrainData), phase_tag, static_cast<std::uint64_t>(step)});
    for (Eigen::Index k = 0; k < b.x.cols(); ++k) {
        const MpcSample& s = dataset.samples[eligible[rng.index(eligible.size())]];
        b.x.col(k) = s.x;
        b.t[k] = s.t;
        b.target[k] = s.v_hat;
    }
    return b;
}

LossBatch Trainer::sample_pde(double t, std::uint64_t phase_tag, std::uint64_t n) const
{
    RngStream rng(config.seed, {tag(StreamTag::TrainPde), phase_tag, static_cast<std::uint64_t>(step)});
    LossBatch b;
    b.x.resize(system->state_dim(), static_cast<Eigen::Index>(n));
    b.t.resize(b.x.cols());
    const double T = system->horizon();
    const StateBox box = net->domain();
    for (Eigen::Index k = 0; k < b.x.cols(); ++k) {
        for (int i = 0; i < box.dim(); ++i) b.x(i, k) = rng.uniform(box.lo[i], box.hi[i]);
        system->project(std::span<double>(b.x.col(k).data(), static_cast<std::size_t>(box.dim())));
        b.t[k] = rng.uniform(t, T);
    }
    if (b.t.size() > 0 && b.t.minCoeff() < t) throw ContractViolation("collocation time precedes the window");
    return b;
}

void Trainer::log(const char* phase, double l_data, double l_pde, double t, double started_ms)
{
    MetricRow r;
    r.step = step;
    r.phase = phase;
    r.l_data = l_data;
    r.l_pde = l_pde;
    r.lambda = lambda;
    r.t_window = t;
    r.wall_ms = now_ms() - started_ms;
    report.rows.push_back(r);
    if (on_log) on_log(r);
}

void Trainer::pretrain()
{
    if (dataset.size() == 0) throw ConfigError("pretrain: empty dataset");
    const double started = now_ms();
    for (int k = 0; k < config.pretrain_steps; ++k) {
        ++step;
        const LossBatch b = sample_data(0.0, kPretrain, static_cast<std::uint64_t>(config.n_mpc));
        const LossResult r = loss_gradients(*net, b, LossKind::Data);
        adam.apply(*net, r.grad);
        report.final_loss = r.loss;
        if (k % config.log_every == 0 || k + 1 == config.pretrain_steps) log("pretrain", r.loss, 0.0, 0.0, started);
    }
}

double Trainer::joint_step(double t, LossKind data_kind)
{
    const std::uint64_t phase_tag = data_kind == LossKind::DataFinetune ? kFinetune : kCurriculum;
    const LossResult pde = loss_gradients(*net, sample_pde(t, phase_tag, static_cast<std::uint64_t>(config.n_pde)),
                                          LossKind::Pde);
    const LossBatch db = sample_data(t, phase_tag, static_cast<std::uint64_t>(config.n_mpc));
    Eigen::VectorXd grad = pde.grad;
    double l_data = 0.0;
    if (db.x.cols() > 0) {
        const LossResult data = loss_gradients(*net, db, data_kind, config.lambda_fp);
        lambda = update_lambda(lambda, pde.grad.norm(), data.grad.norm());
        grad += lambda * data.grad;
        l_data = data.loss;
    }
    adam.apply(*net, grad);
    last_l_data = l_data;
    last_l_pde = pde.loss;
    return pde.loss + lambda * l_data;
}

void Trainer::curriculum()
{
    const double T = system->horizon();
    const double started = now_ms();
    int events = 0;
    double t_r = T - config.h_r;
    for (int n = 1; n <= config.curriculum_steps; ++n) {
        const double tau = curriculum_time(T, n, config.curriculum_steps);
        const double t = config.time_curriculum ? tau : 0.0;
        if (config.refine && t_r >= config.h_r - 1e-9 && tau < t_r - 1e-12) {
            dataset = refine(*system, mpc, *net, t_r, config.h_r, static_cast<std::uint64_t>(events));
            report.refinements.push_back({step, t_r, dataset.size()});
            ++events;
            t_r = T - (events + 1) * config.h_r;
        }
        ++step;
        report.final_loss = joint_step(t, LossKind::Data);
        if ((n - 1) % config.log_every == 0 || n == config.curriculum_steps)
            log("curriculum", last_l_data, last_l_pde, t, started);
    }
}

void Trainer::finetune()
{
    GenerateOptions opts;
    opts.policy = net.get();
    opts.stream = tag(StreamTag::Finetune);
    dataset = generate(*system, mpc, opts);
    adam.lr = config.lr * config.finetune_lr_scale;
    const double started = now_ms();
    for (int k = 0; k < config.finetune_steps; ++k) {
        ++step;
        report.final_loss = joint_step(0.0, LossKind::DataFinetune);
        if (k % config.log_every == 0 || k + 1 == config.finetune_steps)
            log("finetune", last_l_data, last_l_pde, 0.0, started);
    }
}

TrainResult train_full(SystemPtr system, const TrainConfig& config, const MpcConfig& mpc, const NetConfig& net,
                       const MpcDataset* initial, std::function<void(const MetricRow&)> on_log)
{
    const double started = now_ms();
    Trainer tr(std::move(system), config, mpc, net);
    tr.on_log = std::move(on_log);
    tr.dataset = initial ? *initial : generate(*tr.system, tr.mpc);
    if (tr.dataset.system != tr.system->name())
        throw ConfigError("dataset belongs to system " + tr.dataset.system + ", not " + tr.system->name());

    if (config.pretrain) tr.pretrain();
    else tr.report.skipped.push_back("pretrain");
    if (config.curriculum) tr.curriculum();
    else tr.report.skipped.push_back("curriculum");
    if (config.finetune) tr.finetune();
    else tr.report.skipped.push_back("finetune");

    tr.report.final_lambda = tr.lambda;
    tr.report.wall_seconds = (now_ms() - started) / 1000.0;
    return {tr.net, tr.adam, std::move(tr.dataset), std::move(tr.report)};
}

} // namespace reachguide
