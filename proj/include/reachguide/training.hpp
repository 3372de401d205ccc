#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachguide/mpcgen.hpp"
#include "reachguide/valuenet.hpp"

namespace reachguide {

struct TrainConfig {
    int n_pde = 8192;             // collocation points per step
    int n_mpc = 2048;             // dataset triples per step
    int pretrain_steps = 10000;
    int curriculum_steps = 10000; // N_c
    int finetune_steps = 2000;
    double lr = 2e-5;
    double finetune_lr_scale = 0.1;
    double lambda_fp = 100.0;
    double h_r = 0.2;             // refinement horizon, seconds
    bool pretrain = true;
    bool curriculum = true;       // run the joint PDE + data phase at all
    bool time_curriculum = true;  // grow the time window; false samples [0, T] from the first step
    bool refine = true;
    bool finetune = true;
    bool filter_by_time = true;   // drop dataset triples older than the current window start
    int log_every = 50;
    std::uint64_t seed = 0;

    void validate(double horizon) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// lambda <- 0.9 lambda + 0.1 |g_pde| / |g_data|; unchanged when |g_data| == 0.
double update_lambda(double lambda, double pde_grad_norm, double data_grad_norm);

/// Start of the sampled time window at curriculum step n (1-based).
double curriculum_time(double horizon, int n, int steps);

struct MetricRow {
    std::int64_t step = 0;      // global, monotone across phases
    std::string phase;
    double l_data = 0.0;
    double l_pde = 0.0;
    double lambda = 0.0;
    double t_window = 0.0;
    double wall_ms = 0.0;
};

struct RefineEvent {
    std::int64_t step = 0;
    double t_r = 0.0;
    std::size_t samples = 0;
};

struct TrainReport {
    std::vector<MetricRow> rows;
    std::vector<RefineEvent> refinements;
    std::vector<std::string> skipped;   // phases disabled by config
    double wall_seconds = 0.0;
    double final_lambda = 1.0;
    double final_loss = 0.0;            // last combined loss
    std::string checkpoint;

    void save_csv(const std::string& path) const;
    nlohmann::json summary() const;
};

/// Optimiser state and bookkeeping threaded through the phases.
struct Trainer {
    SystemPtr system;
    TrainConfig config;
    MpcConfig mpc;
    ValueNetPtr net;
    AdamState adam;
    MpcDataset dataset;
    TrainReport report;
    double lambda = 1.0;
    std::int64_t step = 0;
    std::function<void(const MetricRow&)> on_log;

    Trainer(SystemPtr system, TrainConfig config, MpcConfig mpc, NetConfig net_config);

    /// Data-only steps on the whole dataset.
    void pretrain();
    /// Joint PDE + data steps over the shrinking time window, with refinement events.
    void curriculum();
    /// Regenerates the dataset from the learned policy, then joint steps at t = 0
    /// with the false-positive weighted data loss and a smaller learning rate.
    void finetune();

    /// One joint step on [t, T]; returns the combined loss.
    double joint_step(double t, LossKind data_kind);
    double last_l_data = 0.0;
    double last_l_pde = 0.0;

private:
    void log(const char* phase, double l_data, double l_pde, double t, double started_ms);
    LossBatch sample_data(double t, std::uint64_t phase_tag, std::uint64_t n) const;
    LossBatch sample_pde(double t, std::uint64_t phase_tag, std::uint64_t n) const;
};

struct TrainResult {
    ValueNetPtr net;
    AdamState adam;
    MpcDataset dataset;
    TrainReport report;
};

/// generate -> pretrain -> curriculum -> finetune. `initial` replaces the
/// generate step when given.
TrainResult train_full(SystemPtr system, const TrainConfig& config, const MpcConfig& mpc, const NetConfig& net,
                       const MpcDataset* initial = nullptr,
                       std::function<void(const MetricRow&)> on_log = {});

} // namespace reachguide
