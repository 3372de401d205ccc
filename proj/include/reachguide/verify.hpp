#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachguide/mpcgen.hpp"
#include "reachguide/value_function.hpp"

namespace reachguide {

class GridValueFn;

struct VerifyConfig {
    double epsilon = 1e-3;
    double beta = 1e-16;
    int m_volume = 1000000;
    int m_calib = 40000;
    int m_accuracy = 100000;
    double dt = 0.02;
    double horizon = 0.0;            // rollout length; <= 0 uses T
    double oversample_cap = 100.0;   // rejection sampling budget, multiples of m_calib
    std::uint64_t seed = 0;

    void validate() const;
    double rollout_horizon(const SystemModel& system) const { return horizon > 0.0 ? horizon : system.horizon(); }
};

void to_json(nlohmann::json& j, const VerifyConfig& c);
void from_json(const nlohmann::json& j, VerifyConfig& c);

// ---------------------------------------------------------------------------
// Policies

class ControlPolicy {
public:
    virtual ~ControlPolicy() = default;
    virtual std::string name() const = 0;
    virtual ControlVec control(const StateVec& x, double t) const = 0;
    /// Called at the start of every rollout.
    virtual void reset() const {}
};

/// Query point for a value function: t clamped to [0, T], x clamped to its domain.
double clamp_time(const ValueFunction& value, double t);
StateVec clamp_to_domain(const ValueFunction& value, const StateVec& x);

/// u*(x, t) = argmax_u <grad V, f(x, u)>.
class ValuePolicy final : public ControlPolicy {
public:
    explicit ValuePolicy(const ValueFunction& value, std::string name = "learned") : value_(value), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    ControlVec control(const StateVec& x, double t) const override;

private:
    const ValueFunction& value_;
    std::string name_;
};

/// Online sampling-based MPC, warm-started from its previous solution.
class MpcPolicy final : public ControlPolicy {
public:
    MpcPolicy(const SystemModel& system, MpcConfig config, double horizon = 0.0);
    std::string name() const override { return "mpc"; }
    ControlVec control(const StateVec& x, double t) const override;
    void reset() const override { warm_.clear(); }

private:
    const SystemModel& system_;
    MpcConfig config_;
    double horizon_;
    mutable std::vector<ControlVec> warm_;
    mutable std::uint64_t calls_ = 0;
};

/// Track follower for the F1Tenth car: steers towards a point ahead on the
/// centreline and holds a target speed.
class PurePursuitPolicy final : public ControlPolicy {
public:
    PurePursuitPolicy(const SystemModel& system, double target_speed = 6.0, double lookahead = 2.0);
    std::string name() const override { return "nominal"; }
    ControlVec control(const StateVec& x, double t) const override;

private:
    const SystemModel& system_;
    double target_speed_;
    double lookahead_;
};

struct FilterResult {
    ControlVec u;
    bool modified = false;   // constraint was active
    bool feasible = true;    // false: fell back to the Hamiltonian maximiser
};

/// argmin |u - u_nom|^2 s.t. <grad V, f(x,u)> + dV/dt >= -gamma V, u in the box.
FilterResult safety_filter(const SystemModel& system, const ValueSample& value, const ControlVec& u_nom,
                           const StateVec& x, double gamma);
FilterResult safety_filter(const SystemModel& system, const ValueFunction& value, const ControlVec& u_nom,
                           const StateVec& x, double t, double gamma);

class FilteredPolicy final : public ControlPolicy {
public:
    FilteredPolicy(const ControlPolicy& nominal, const ValueFunction& value, double gamma = 1.0)
        : nominal_(nominal), value_(value), gamma_(gamma) {}
    std::string name() const override { return "filtered_" + nominal_.name(); }
    ControlVec control(const StateVec& x, double t) const override;

private:
    const ControlPolicy& nominal_;
    const ValueFunction& value_;
    double gamma_;
};

// ---------------------------------------------------------------------------
// Rollouts

struct RolloutResult {
    Trajectory trajectory;
    double min_l = 0.0;
    bool collided = false;
    bool valid = true;            // false when the state went non-finite
    double distance = 0.0;        // planar path length (position axes 0, 1)
    double mean_step_us = 0.0;    // policy evaluation time per step
    double max_step_us = 0.0;
};

/// Closed-loop Euler rollout. Stops at the first collision when `stop_on_collision`.
RolloutResult rollout(const SystemModel& system, const ControlPolicy& policy, const StateVec& x0, double t0, double dt,
                      double horizon, bool stop_on_collision = false);

/// Rollout under the value's own optimal policy.
RolloutResult rollout_policy(const SystemModel& system, const ValueFunction& value, const StateVec& x0, double t0,
                             double dt, double horizon);

/// Safety labels for many starts under the value's policy, stepped together in
/// batches. Entry k is true when the rollout from column k entered the failure
/// set or went non-finite.
std::vector<char> rollout_unsafe_batch(const SystemModel& system, const ValueFunction& value,
                                       const Eigen::MatrixXd& starts, double t0, double dt, double horizon);

// ---------------------------------------------------------------------------
// Conformal verification

/// One-sided Clopper-Pearson upper bound on p after k events in m trials, confidence 1 - beta.
double clopper_pearson_upper(std::size_t k, std::size_t m, double beta);

struct CalibrationSample {
    double score = 0.0;   // V(x, 0)
    bool unsafe = false;
};

struct DeltaSearch {
    double delta = std::numeric_limits<double>::infinity();
    std::size_t retained = 0;   // calibration states with score > delta
    std::size_t violations = 0; // unsafe among them
    double bound = 1.0;         // Clopper-Pearson bound at delta
    bool feasible = false;
};

/// Smallest delta >= 0 among {0} and the unsafe scores whose retained set
/// satisfies the bound; infeasible returns delta = +inf.
DeltaSearch search_delta(const std::vector<CalibrationSample>& samples, double epsilon, double beta);

struct VerifyResult {
    double delta = std::numeric_limits<double>::infinity();
    double volume = 0.0;
    double volume_se = 0.0;
    std::size_t calibration = 0;
    std::size_t unsafe_total = 0;
    std::size_t retained = 0;
    std::size_t violations = 0;
    double bound = 1.0;
    std::vector<double> unsafe_scores;   // sorted ascending

    nlohmann::json to_json() const;
};

/// Samples calibration states with V(x,0) > 0, labels them by rollout and runs the delta search.
VerifyResult conformal_delta(const SystemModel& system, const ValueFunction& value, const VerifyConfig& config);

/// Fraction of uniform states with V(x,0) > delta.
double recovered_volume(const SystemModel& system, const ValueFunction& value, double delta,
                        const VerifyConfig& config, double* standard_error = nullptr);

/// conformal_delta followed by recovered_volume at the returned delta.
VerifyResult verify(const SystemModel& system, const ValueFunction& value, const VerifyConfig& config);

struct AccuracyMetrics {
    double mse = 0.0;
    double false_positive_rate = 0.0;   // among oracle-unsafe states
    std::size_t samples = 0;
    std::size_t oracle_unsafe = 0;
};

AccuracyMetrics accuracy_metrics(const ValueFunction& value, const GridValueFn& oracle, const VerifyConfig& config);

// ---------------------------------------------------------------------------
// Policy comparison

struct PolicyStats {
    std::string name;
    std::size_t runs = 0;
    double safe_fraction = 0.0;
    double collision_rate = 0.0;
    double mean_distance = 0.0;
    double mean_step_us = 0.0;
};

std::vector<PolicyStats> evaluate_policies(const SystemModel& system, const std::vector<const ControlPolicy*>& policies,
                                           const Eigen::MatrixXd& starts, double dt, double horizon);

std::string policy_table_csv(const std::vector<PolicyStats>& rows);

} // namespace reachguide
