#pragma once

#include "reachguide/dynamics.hpp"

namespace reachguide {

struct ValueSample {
    double v = 0.0;
    double dv_dt = 0.0;
    Eigen::VectorXd grad_x;
};

/// Anything that can be queried for V(x,t) and its first derivatives:
/// learned networks, tabulated grid solutions, analytic stand-ins.
/// Batched entry points take states as columns of an n x B matrix.
class ValueFunction {
public:
    virtual ~ValueFunction() = default;

    virtual const SystemModel& system() const = 0;
    /// Region where queries are valid; the system box unless a subclass says otherwise.
    virtual StateBox domain() const { return system().state_box(); }
    virtual double value(const StateVec& x, double t) const = 0;
    virtual ValueSample evaluate(const StateVec& x, double t) const = 0;

    virtual void values(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts, Eigen::VectorXd& out) const;
    virtual void evaluate_batch(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts, Eigen::VectorXd& v,
                                Eigen::VectorXd& dv_dt, Eigen::MatrixXd& grad_x) const;
};

/// V(x,t) = l(x): the value with zero time-to-go.
class BoundaryValue final : public ValueFunction {
public:
    explicit BoundaryValue(SystemPtr system) : system_(std::move(system)) {}

    const SystemModel& system() const override { return *system_; }
    double value(const StateVec& x, double) const override { return system_->boundary_l(x); }
    ValueSample evaluate(const StateVec& x, double) const override
    {
        return {system_->boundary_l(x), 0.0, system_->boundary_gradient(x)};
    }

private:
    SystemPtr system_;
};

/// Wraps another value function with a constant offset (tests, oracle + c).
class ShiftedValue final : public ValueFunction {
public:
    ShiftedValue(const ValueFunction& base, double shift) : base_(base), shift_(shift) {}

    const SystemModel& system() const override { return base_.system(); }
    double value(const StateVec& x, double t) const override { return base_.value(x, t) + shift_; }
    ValueSample evaluate(const StateVec& x, double t) const override
    {
        ValueSample s = base_.evaluate(x, t);
        s.v += shift_;
        return s;
    }

private:
    const ValueFunction& base_;
    double shift_;
};

} // namespace reachguide
