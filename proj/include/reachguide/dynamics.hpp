#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "reachguide/common.hpp"
#include "reachguide/track.hpp"

namespace reachguide {

struct ControlBounds {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int dim() const { return static_cast<int>(lo.size()); }
    Eigen::VectorXd mid() const { return 0.5 * (lo + hi); }
    Eigen::VectorXd range() const { return hi - lo; }
    ControlVec clamp(const ControlVec& u) const { return u.cwiseMax(lo).cwiseMin(hi); }
    bool contains(const ControlVec& u, double tol = 0.0) const;
};

struct StateBox {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const StateVec& x, double tol = 0.0) const;
    double volume() const { return (hi - lo).prod(); }
};

/// Discrete trajectory produced by forward Euler: states[h+1] = states[h] + f(states[h], controls[h]) * dt.
struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<StateVec> states;
    std::vector<ControlVec> controls;

    std::size_t steps() const { return controls.size(); }
};

/// A control-affine dynamical system with a boundary function whose
/// sub-zero level set is the failure set.
///
/// Implementations supply the raw vector field through `flow_into`; the
/// control is first clamped into `effective_bounds(x)`, which equals the
/// nominal control box except where a system has state-dependent actuator
/// limits. With u clamped, f(x,u) = drift(x) + input_matrix(x) * u.
/// Instances are immutable after construction and safe to share across threads.
class SystemModel {
public:
    SystemModel(std::string name, ControlBounds bounds, StateBox box, double horizon);
    virtual ~SystemModel() = default;

    const std::string& name() const { return name_; }
    int state_dim() const { return box_.dim(); }
    int control_dim() const { return bounds_.dim(); }
    const ControlBounds& control_bounds() const { return bounds_; }
    const StateBox& state_box() const { return box_; }
    double horizon() const { return horizon_; }

    virtual bool control_affine() const { return true; }

    // --- raw hooks, implemented per system -------------------------------
    /// xdot = f(x, u) with u already inside effective_bounds(x).
    virtual void flow_into(std::span<const double> x, std::span<const double> u, std::span<double> xdot) const = 0;
    virtual double boundary_raw(std::span<const double> x) const = 0;
    /// Gradient of l; a fixed one-sided subgradient at kinks.
    virtual void boundary_gradient_into(std::span<const double> x, std::span<double> grad) const = 0;
    virtual StateVec drift(const StateVec& x) const = 0;
    virtual Eigen::MatrixXd input_matrix(const StateVec& x) const = 0;
    virtual void effective_bounds_into(std::span<const double> x, std::span<double> lo, std::span<double> hi) const;
    /// Maps a state back onto its manifold (quaternion normalisation); identity by default.
    virtual void project(std::span<double> x) const { (void)x; }

    // --- checked operations -----------------------------------------------
    StateVec flow(const StateVec& x, const ControlVec& u) const;
    StateVec step_euler(const StateVec& x, const ControlVec& u, double dt) const;
    /// Reusable buffers for the unchecked rollout path.
    struct StepScratch {
        std::vector<double> xdot, lo, hi, u;
    };
    StepScratch make_scratch() const;
    /// Unchecked hot-path Euler step used by rollouts; x_next may not alias x.
    /// Returns false when the new state is not finite.
    bool step_euler_into(std::span<const double> x, std::span<const double> u, double dt,
                         std::span<double> x_next, StepScratch& scratch) const;
    double boundary_l(const StateVec& x) const;
    StateVec boundary_gradient(const StateVec& x) const;
    ControlBounds effective_bounds(const StateVec& x) const;
    ControlVec clamp_control(const StateVec& x, const ControlVec& u) const;

    /// Maximiser of <grad_v, f(x,u)> over the effective control box (bang-bang,
    /// midpoint on exact zero switching coefficient).
    ControlVec hamiltonian_control(const StateVec& x, const Eigen::VectorXd& grad_v) const;
    double hamiltonian(const StateVec& x, const Eigen::VectorXd& grad_v) const;
    /// Brute-force maximiser over box corners plus `samples` random controls.
    ControlVec sampled_hamiltonian_control(const StateVec& x, const Eigen::VectorXd& grad_v,
                                           RngStream& rng, int samples = 1000) const;

    StateVec sample_state(RngStream& rng) const;

protected:
    void check_state(const StateVec& x, const char* what) const;

private:
    std::string name_;
    ControlBounds bounds_;
    StateBox box_;
    double horizon_;
};

using SystemPtr = std::shared_ptr<const SystemModel>;

// ---------------------------------------------------------------------------

/// Parameterised vertical drone: x = (z, v_z, K), u in [-1, 1].
class VerticalDrone final : public SystemModel {
public:
    explicit VerticalDrone(double gravity = 9.8);

    void flow_into(std::span<const double> x, std::span<const double> u, std::span<double> xdot) const override;
    double boundary_raw(std::span<const double> x) const override;
    void boundary_gradient_into(std::span<const double> x, std::span<double> grad) const override;
    StateVec drift(const StateVec& x) const override;
    Eigen::MatrixXd input_matrix(const StateVec& x) const override;

    double gravity() const { return gravity_; }

private:
    double gravity_;
};

struct QuadrotorParams {
    double gz = -9.8;
    double ct = 1.0;
    double mass = 1.0;
    double disk_radius = 0.17;
    double obstacle_radius = 0.5;
};

/// 13D quadrotor: x = (p[3], q[4] (w,x,y,z), v[3], omega[3]); u = (F, alpha_x, alpha_y, alpha_z).
class Quadrotor13D final : public SystemModel {
public:
    explicit Quadrotor13D(QuadrotorParams params = {});

    void flow_into(std::span<const double> x, std::span<const double> u, std::span<double> xdot) const override;
    double boundary_raw(std::span<const double> x) const override;
    void boundary_gradient_into(std::span<const double> x, std::span<double> grad) const override;
    StateVec drift(const StateVec& x) const override;
    Eigen::MatrixXd input_matrix(const StateVec& x) const override;
    void project(std::span<double> x) const override;

    const QuadrotorParams& params() const { return params_; }

private:
    QuadrotorParams params_;
};

struct F1TenthParams {
    double mu = 1.0489;
    double c_sf = 4.718;
    double c_sr = 5.4562;
    double lf = 0.15875;
    double lr = 0.17145;
    double h_cg = 0.074;
    double mass = 3.74;
    double inertia_z = 0.04712;
    double gravity = 9.81;
    double kinematic_speed = 0.5;
    double v_switch = 7.319;
    double v_max = 8.0;
    double steer_max = 0.4189;
};

/// 7D single-track car: x = (p_x, p_y, steer, v, yaw, yaw_rate, slip); u = (steer_rate, accel).
class F1Tenth7D final : public SystemModel {
public:
    F1Tenth7D(Track track, F1TenthParams params = {});

    void flow_into(std::span<const double> x, std::span<const double> u, std::span<double> xdot) const override;
    double boundary_raw(std::span<const double> x) const override;
    void boundary_gradient_into(std::span<const double> x, std::span<double> grad) const override;
    StateVec drift(const StateVec& x) const override;
    Eigen::MatrixXd input_matrix(const StateVec& x) const override;
    void effective_bounds_into(std::span<const double> x, std::span<double> lo, std::span<double> hi) const override;

    bool kinematic_mode(double v) const { return std::abs(v) < params_.kinematic_speed; }
    const Track& track() const { return track_; }
    const F1TenthParams& params() const { return params_; }

private:
    Track track_;
    F1TenthParams params_;
};

struct PubSubParams {
    double a = -0.1;
    double b = 1.0;
    double alpha = 20.0;
    double beta = 0.0;
    int subscribers = 39;
    double box_half_width = 1.0;
};

/// Publisher-subscriber chain: x = (x_0, x_1..x_m); u = (u_1..u_m).
class PubSub40D final : public SystemModel {
public:
    explicit PubSub40D(PubSubParams params = {});

    void flow_into(std::span<const double> x, std::span<const double> u, std::span<double> xdot) const override;
    double boundary_raw(std::span<const double> x) const override;
    void boundary_gradient_into(std::span<const double> x, std::span<double> grad) const override;
    StateVec drift(const StateVec& x) const override;
    Eigen::MatrixXd input_matrix(const StateVec& x) const override;

    const PubSubParams& params() const { return params_; }

private:
    PubSubParams params_;
};

/// Names accepted by make_system.
std::vector<std::string> system_names();

struct SystemOptions {
    std::string track_path;   // F1Tenth; empty selects the built-in oval
    double quad_gz = -9.8;
    double pubsub_a = -0.1;
    double pubsub_b = 1.0;
};

/// vertical_drone | quadrotor13d | f1tenth7d | pubsub40d
SystemPtr make_system(const std::string& name, const SystemOptions& options = {});

} // namespace reachguide
