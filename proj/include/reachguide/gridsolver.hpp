#pragma once

#include <string>
#include <vector>

#include "reachguide/value_function.hpp"

namespace reachguide {

struct GridAxis {
    double lo = 0.0;
    double hi = 1.0;
    int count = 3;

    double spacing() const { return (hi - lo) / (count - 1); }
    double node(int i) const { return lo + spacing() * i; }
};

struct Grid {
    std::vector<GridAxis> axes;
    double horizon = 1.0;
    /// Time step; <= 0 selects cfl_fraction times the CFL bound.
    double dt = 0.0;
    double cfl_fraction = 0.5;
    /// Spacing of stored snapshots in seconds; <= 0 stores only t = 0 and t = T.
    double snapshot_stride = 0.05;
    /// Dissipation from the speed bound over each node's stencil instead of the whole grid.
    bool local_dissipation = true;

    std::size_t node_count() const;
    void validate() const;
};

/// Grid spanning a system's state box with the given node counts.
Grid grid_for(const SystemModel& system, const std::vector<int>& counts);

/// Dense tabulated value function over a rectangular grid. Snapshot k holds
/// V(., times[k]) in row-major order (last axis fastest); times ascend from 0 to T.
class GridValueFn final : public ValueFunction {
public:
    GridValueFn(SystemPtr system, Grid grid, std::vector<double> times, std::vector<std::vector<double>> values);

    const SystemModel& system() const override { return *system_; }
    StateBox domain() const override;
    const SystemPtr& system_ptr() const { return system_; }
    const Grid& grid() const { return grid_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& snapshot(std::size_t k) const { return values_.at(k); }
    std::size_t node_index(const std::vector<int>& idx) const;
    StateVec node_state(std::size_t flat) const;

    /// Multilinear in space, linear in time. Throws OutOfDomainError outside the grid.
    double interpolate(const StateVec& x, double t) const;
    double value(const StateVec& x, double t) const override { return interpolate(x, t); }
    /// Central differences of the interpolant (one-sided at the domain edge).
    ValueSample evaluate(const StateVec& x, double t) const override;

    /// Trapezoid-weighted fraction of nodes with V(., t) <= 0.
    double brt_volume(double t) const;

    void save(const std::string& path) const;
    static GridValueFn load(const std::string& path, SystemPtr system);

private:
    std::vector<double> values_at(double t) const;
    double interpolate_snapshot(const std::vector<double>& snap, const StateVec& x) const;

    SystemPtr system_;
    Grid grid_;
    std::vector<double> times_;
    std::vector<std::vector<double>> values_;
    std::vector<std::size_t> strides_;
};

struct SolveStats {
    double dt = 0.0;
    std::size_t steps = 0;
    std::vector<double> dissipation;   // per-axis Lax-Friedrichs coefficient
};

/// Backward integration of the HJB variational inequality
///   min{ D_t V + H(x, grad V), l(x) - V } = 0,  V(x,T) = l(x)
/// with a global Lax-Friedrichs numerical Hamiltonian.
GridValueFn solve_vi(SystemPtr system, const Grid& grid, SolveStats* stats = nullptr);

/// Largest stable time step for the grid (CFL bound of the explicit scheme).
double cfl_bound(const SystemModel& system, const Grid& grid);

} // namespace reachguide
