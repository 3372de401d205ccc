#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachguide/value_function.hpp"

namespace reachguide {

struct MpcConfig {
    int n_trajectories = 100;     // N
    int n_rounds = 10;            // R
    double dt = 0.02;
    double sigma = 0.3;           // fraction of the control range
    double anneal = 0.8;          // sigma multiplier per round
    double noise_correlation = 0.7;   // AR(1) coefficient of the perturbations along the horizon
    int dataset_size = 300;       // number of sampled (t, x) points before bootstrapping
    double horizon_cap = 0.0;     // seconds; <= 0 means none
    bool bootstrap = true;
    std::uint64_t seed = 0;

    void validate() const;
};

void to_json(nlohmann::json& j, const MpcConfig& c);
void from_json(const nlohmann::json& j, MpcConfig& c);

enum class Provenance : int { Direct = 0, Bootstrapped = 1, Refined = 2 };

struct MpcSample {
    double t = 0.0;
    StateVec x;
    double v_hat = 0.0;
    Provenance provenance = Provenance::Direct;
    std::uint32_t chain = 0;   // index of the sampled point this entry came from
    std::uint32_t step = 0;    // position h along that point's best trajectory
};

struct MpcDataset {
    std::string system;
    std::string fingerprint;
    double dt = 0.0;
    double effective_horizon = 0.0;
    std::vector<MpcSample> samples;

    std::size_t size() const { return samples.size(); }

    /// JSON lines: header line, then one sample per line.
    void save_jsonl(const std::string& path) const;
    static MpcDataset load_jsonl(const std::string& path);
    /// Header line, then packed little-endian float64 records (t, v, provenance, chain, step, x...).
    void save_binary(const std::string& path) const;
    static MpcDataset load_binary(const std::string& path);
    /// Dispatches on the first header field.
    static MpcDataset load(const std::string& path);
};

/// Cost-to-go used at the end of a truncated rollout.
class TerminalCost {
public:
    virtual ~TerminalCost() = default;
    virtual double evaluate(double t, const StateVec& x) const = 0;
    /// Columns of xs share the same time.
    virtual void evaluate_batch(double t, const Eigen::MatrixXd& xs, Eigen::VectorXd& out) const;
};

/// Terminal cost backed by a value function.
class ValueTerminal final : public TerminalCost {
public:
    explicit ValueTerminal(const ValueFunction& value) : value_(value) {}
    double evaluate(double t, const StateVec& x) const override;
    void evaluate_batch(double t, const Eigen::MatrixXd& xs, Eigen::VectorXd& out) const override;

private:
    const ValueFunction& value_;
};

struct PointResult {
    double v_hat = 0.0;
    Trajectory best;
    std::vector<double> round_best;    // best score after each round
    std::vector<double> boundary;      // l along best
    std::vector<double> running_min;   // suffix minimum along best, terminal included
    bool terminal_applied = false;
};

/// Sampling-based MPC from (t, x). `u_nom` may be empty (midpoint sequence) or
/// hold at least H controls. `stream` keys the random perturbations.
PointResult solve_point(const SystemModel& system, const MpcConfig& config, double t, const StateVec& x,
                        const std::vector<ControlVec>& u_nom, const TerminalCost* terminal,
                        std::uint64_t stream, double horizon = 0.0);

/// Last trajectory index that gets a bootstrapped label.
std::size_t bootstrap_end(const PointResult& result);

/// Steps H for a solve starting at t: round(min(T - t, cap, horizon) / dt).
int horizon_steps(const SystemModel& system, const MpcConfig& config, double t, double horizon = 0.0);

/// Closed-loop nominal sequence from the Hamiltonian-maximising policy of `value`.
std::vector<ControlVec> policy_nominal(const SystemModel& system, const ValueFunction& value, double t,
                                       const StateVec& x, double dt, int steps);

struct GenerateOptions {
    double t_lo = 0.0;                        // sample t ~ U(t_lo, T)
    double horizon = 0.0;                     // rollout horizon in seconds; <= 0 runs to T (or the cap)
    const ValueFunction* policy = nullptr;    // nominal sequences from this value's policy
    const ValueFunction* terminal = nullptr;  // terminal cost
    Provenance direct = Provenance::Direct;
    std::uint64_t stream = 0;                 // distinguishes regenerations sharing a seed
};

MpcDataset generate(const SystemModel& system, const MpcConfig& config, const GenerateOptions& options = {});

/// Regenerates the dataset over [max(0, t_R - H_R), T] with horizon H_R, the
/// learned value as terminal cost and its policy as nominal.
MpcDataset refine(const SystemModel& system, const MpcConfig& config, const ValueFunction& value, double t_r,
                  double h_r, std::uint64_t event);

std::string dataset_fingerprint(const std::string& system, const MpcConfig& config, const GenerateOptions& options);

} // namespace reachguide
