#include "reachguide/gridsolver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"


namespace reachguide {

static_assert(std::endian::native == std::endian::little, "binary artifact formats assume a little-endian host");

std::size_t Grid::node_count() const
{
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.count);
    return n;
}

void Grid::validate() const
{
    if (axes.empty()) throw ConfigError("grid needs at least one axis");
    if (axes.size() > 4) throw ConfigError("grid solver supports at most 4 axes");
    for (const auto& a : axes) {
        if (a.count < 3) throw ConfigError("grid axes need at least 3 nodes");
        if (!(a.lo < a.hi)) throw ConfigError("grid axes need lo < hi");
    }
    if (!(horizon > 0.0)) throw ConfigError("grid horizon must be positive");
}

Grid grid_for(const SystemModel& system, const std::vector<int>& counts)
{
    if (static_cast<int>(counts.size()) != system.state_dim())
        throw ConfigError("grid needs one node count per state axis (" + std::to_string(system.state_dim()) + ")");
    Grid g;
    g.horizon = system.horizon();
    for (int i = 0; i < system.state_dim(); ++i)
        g.axes.push_back({system.state_box().lo[i], system.state_box().hi[i], counts[static_cast<std::size_t>(i)]});
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------

namespace {

struct NodeTables {
    std::size_t nodes = 0;
    int n = 0;
    int m = 0;
    std::vector<std::size_t> strides;
    std::vector<double> boundary;   // l at nodes
    std::vector<double> drift;      // nodes x n
    std::vector<double> input;      // nodes x n x m (row-major per node)
    std::vector<double> lo, hi;     // nodes x m effective bounds
};

std::vector<std::size_t> make_strides(const Grid& grid)
{
    std::vector<std::size_t> s(grid.axes.size());
    std::size_t acc = 1;
    for (std::size_t i = grid.axes.size(); i-- > 0;) {
        s[i] = acc;
        acc *= static_cast<std::size_t>(grid.axes[i].count);
    }
    return s;
}

StateVec node_coordinates(const Grid& grid, const std::vector<std::size_t>& strides, std::size_t flat)
{
    StateVec x(static_cast<Eigen::Index>(grid.axes.size()));
    for (std::size_t i = 0; i < grid.axes.size(); ++i) {
        const int k = static_cast<int>((flat / strides[i]) % static_cast<std::size_t>(grid.axes[i].count));
        x[static_cast<Eigen::Index>(i)] = grid.axes[i].node(k);
    }
    return x;
}

NodeTables build_tables(const SystemModel& system, const Grid& grid)
{
    NodeTables t;
    t.nodes = grid.node_count();
    t.n = system.state_dim();
    t.m = system.control_dim();
    t.strides = make_strides(grid);
    t.boundary.resize(t.nodes);
    t.drift.resize(t.nodes * t.n);
    t.input.resize(t.nodes * t.n * t.m);
    t.lo.resize(t.nodes * t.m);
    t.hi.resize(t.nodes * t.m);
    parallel_for(t.nodes, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const StateVec x = node_coordinates(grid, t.strides, k);
            t.boundary[k] = system.boundary_l(x);
            const StateVec f0 = system.drift(x);
            const Eigen::MatrixXd g = system.input_matrix(x);
            const ControlBounds eff = system.effective_bounds(x);
            for (int i = 0; i < t.n; ++i) {
                t.drift[k * t.n + i] = f0[i];
                for (int j = 0; j < t.m; ++j) t.input[(k * t.n + i) * t.m + j] = g(i, j);
            }
            for (int j = 0; j < t.m; ++j) {
                t.lo[k * t.m + j] = eff.lo[j];
                t.hi[k * t.m + j] = eff.hi[j];
            }
        }
    });
    return t;
}

// Per node and axis: max over control-box corners of |f_i(x,u)|.
std::vector<double> node_speeds(const NodeTables& t)
{
    std::vector<double> speed(t.nodes * t.n);
    for (std::size_t k = 0; k < t.nodes; ++k) {
        for (int i = 0; i < t.n; ++i) {
            double up = t.drift[k * t.n + i];
            double down = up;
            for (int j = 0; j < t.m; ++j) {
                const double g = t.input[(k * t.n + i) * t.m + j];
                const double a = g * t.lo[k * t.m + j];
                const double b = g * t.hi[k * t.m + j];
                up += std::max(a, b);
                down += std::min(a, b);
            }
            speed[k * t.n + i] = std::max(std::abs(up), std::abs(down));
        }
    }
    return speed;
}

std::vector<double> dissipation_coefficients(const NodeTables& t, const std::vector<double>& speed)
{
    std::vector<double> alpha(static_cast<std::size_t>(t.n), 0.0);
    for (std::size_t k = 0; k < t.nodes; ++k)
        for (int i = 0; i < t.n; ++i)
            alpha[static_cast<std::size_t>(i)] = std::max(alpha[static_cast<std::size_t>(i)], speed[k * t.n + i]);
    return alpha;
}

double cfl_from(const Grid& grid, const std::vector<double>& alpha)
{
    double rate = 0.0;
    for (std::size_t i = 0; i < grid.axes.size(); ++i) rate += alpha[i] / grid.axes[i].spacing();
    return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

} // namespace

double cfl_bound(const SystemModel& system, const Grid& grid)
{
    grid.validate();
    const NodeTables tab = build_tables(system, grid);
    return cfl_from(grid, dissipation_coefficients(tab, node_speeds(tab)));
}

GridValueFn solve_vi(SystemPtr system, const Grid& grid, SolveStats* stats)
{
    grid.validate();
    if (static_cast<int>(grid.axes.size()) != system->state_dim())
        throw ConfigError("grid has " + std::to_string(grid.axes.size()) + " axes but " + system->name() + " has " +
                          std::to_string(system->state_dim()) + " states");
    const NodeTables tab = build_tables(*system, grid);
    const std::vector<double> speed = node_speeds(tab);
    const std::vector<double> alpha = dissipation_coefficients(tab, speed);
    // stencil-local bound: node and its two neighbours along each axis
    std::vector<double> local;
    if (grid.local_dissipation) {
        local.resize(speed.size());
        for (std::size_t k = 0; k < tab.nodes; ++k) {
            for (int i = 0; i < tab.n; ++i) {
                const std::size_t stride = tab.strides[static_cast<std::size_t>(i)];
                const int count = grid.axes[static_cast<std::size_t>(i)].count;
                const int idx = static_cast<int>((k / stride) % static_cast<std::size_t>(count));
                double a = speed[k * tab.n + i];
                if (idx > 0) a = std::max(a, speed[(k - stride) * tab.n + i]);
                if (idx < count - 1) a = std::max(a, speed[(k + stride) * tab.n + i]);
                local[k * tab.n + i] = a;
            }
        }
    }
    const double cfl = cfl_from(grid, alpha);
    double dt_target = grid.dt > 0.0 ? grid.dt : grid.cfl_fraction * cfl;
    if (grid.dt > 0.0 && grid.dt > cfl)
        throw ConfigError("grid dt " + std::to_string(grid.dt) + " violates the CFL bound; maximum admissible dt is " +
                          std::to_string(cfl));
    const double T = grid.horizon;
    if (!std::isfinite(dt_target)) dt_target = T;

    // snapshot times, descending from T to 0
    std::vector<double> stops{T};
    if (grid.snapshot_stride > 0.0) {
        const int count = static_cast<int>(std::floor(T / grid.snapshot_stride + 1e-9));
        for (int k = 1; k <= count; ++k) {
            const double t = T - k * grid.snapshot_stride;
            if (t > 1e-12) stops.push_back(t);
        }
    }
    stops.push_back(0.0);

    const int n = tab.n, m = tab.m;
    const std::size_t nodes = tab.nodes;
    std::vector<double> value = tab.boundary;
    std::vector<double> next(nodes);
    std::vector<std::vector<double>> snaps{value};
    std::vector<double> snap_times{T};
    std::size_t step_index = 0;
    double used_dt = 0.0;

    for (std::size_t s = 1; s < stops.size(); ++s) {
        const double interval = stops[s - 1] - stops[s];
        const auto substeps = static_cast<std::size_t>(std::max(1.0, std::ceil(interval / dt_target - 1e-9)));
        const double h = interval / static_cast<double>(substeps);
        used_dt = std::max(used_dt, h);
        for (std::size_t sub = 0; sub < substeps; ++sub, ++step_index) {
            parallel_for(nodes, [&](std::size_t begin, std::size_t end) {
                std::vector<double> pbar(static_cast<std::size_t>(n));
                for (std::size_t k = begin; k < end; ++k) {
                    double dissipation = 0.0;
                    for (int i = 0; i < n; ++i) {
                        const auto& axis = grid.axes[static_cast<std::size_t>(i)];
                        const std::size_t stride = tab.strides[static_cast<std::size_t>(i)];
                        const int idx = static_cast<int>((k / stride) % static_cast<std::size_t>(axis.count));
                        const double dx = axis.spacing();
                        double p_plus, p_minus;
                        if (idx == 0) {
                            p_plus = p_minus = (value[k + stride] - value[k]) / dx;
                        } else if (idx == axis.count - 1) {
                            p_plus = p_minus = (value[k] - value[k - stride]) / dx;
                        } else {
                            p_plus = (value[k + stride] - value[k]) / dx;
                            p_minus = (value[k] - value[k - stride]) / dx;
                        }
                        pbar[static_cast<std::size_t>(i)] = 0.5 * (p_plus + p_minus);
                        const double a = grid.local_dissipation ? local[k * n + i] : alpha[static_cast<std::size_t>(i)];
                        dissipation += 0.5 * a * (p_plus - p_minus);
                    }
                    double ham = 0.0;
                    for (int i = 0; i < n; ++i) ham += pbar[static_cast<std::size_t>(i)] * tab.drift[k * n + i];
                    for (int j = 0; j < m; ++j) {
                        double c = 0.0;
                        for (int i = 0; i < n; ++i)
                            c += pbar[static_cast<std::size_t>(i)] * tab.input[(k * n + i) * m + j];
                        ham += std::max(c * tab.lo[k * m + j], c * tab.hi[k * m + j]);
                    }
                    // backward in time: V(t - h) = V(t) + h * H_LF, never increasing, capped by l
                    const double candidate = value[k] + h * std::min(0.0, ham + dissipation);
                    next[k] = std::min(tab.boundary[k], candidate);
                }
            });
            for (std::size_t k = 0; k < nodes; ++k) {
                if (!std::isfinite(next[k]))
                    throw NumericError("grid solver produced a non-finite value at step " + std::to_string(step_index));
            }
            value.swap(next);
        }
        snaps.push_back(value);
        snap_times.push_back(stops[s]);
    }

    std::reverse(snaps.begin(), snaps.end());
    std::reverse(snap_times.begin(), snap_times.end());
    if (stats) {
        stats->dt = used_dt;
        stats->steps = step_index;
        stats->dissipation = alpha;
    }
    return GridValueFn(std::move(system), grid, std::move(snap_times), std::move(snaps));
}

// ---------------------------------------------------------------------------

GridValueFn::GridValueFn(SystemPtr system, Grid grid, std::vector<double> times, std::vector<std::vector<double>> values)
    : system_(std::move(system)), grid_(std::move(grid)), times_(std::move(times)), values_(std::move(values))
{
    grid_.validate();
    if (times_.empty() || times_.size() != values_.size())
        throw ConfigError("grid value function needs one snapshot per stored time");
    if (!std::is_sorted(times_.begin(), times_.end())) throw ConfigError("snapshot times must ascend");
    for (const auto& v : values_)
        if (v.size() != grid_.node_count()) throw ConfigError("snapshot size does not match the grid");
    strides_ = make_strides(grid_);
}

StateBox GridValueFn::domain() const
{
    StateBox b{Eigen::VectorXd(static_cast<Eigen::Index>(grid_.axes.size())), Eigen::VectorXd(static_cast<Eigen::Index>(grid_.axes.size()))};
    for (std::size_t i = 0; i < grid_.axes.size(); ++i) {
        b.lo[static_cast<Eigen::Index>(i)] = grid_.axes[i].lo;
        b.hi[static_cast<Eigen::Index>(i)] = grid_.axes[i].hi;
    }
    return b;
}

std::size_t GridValueFn::node_index(const std::vector<int>& idx) const
{
    std::size_t flat = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) flat += static_cast<std::size_t>(idx[i]) * strides_[i];
    return flat;
}

StateVec GridValueFn::node_state(std::size_t flat) const
{
    return node_coordinates(grid_, strides_, flat);
}

double GridValueFn::interpolate_snapshot(const std::vector<double>& snap, const StateVec& x) const
{
    const std::size_t dims = grid_.axes.size();
    std::size_t base = 0;
    double frac[4] = {0, 0, 0, 0};
    std::size_t stride[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < dims; ++i) {
        const auto& a = grid_.axes[i];
        const double tol = 1e-9 * (a.hi - a.lo);
        const double xi = x[static_cast<Eigen::Index>(i)];
        if (!(xi >= a.lo - tol && xi <= a.hi + tol))
            throw OutOfDomainError("interpolate: state " + format_vector(x) + " outside the grid on axis " +
                                   std::to_string(i));
        double pos = (std::clamp(xi, a.lo, a.hi) - a.lo) / a.spacing();
        int cell = std::min(static_cast<int>(std::floor(pos)), a.count - 2);
        frac[i] = pos - cell;
        base += static_cast<std::size_t>(cell) * strides_[i];
        stride[i] = strides_[i];
    }
    double acc = 0.0;
    for (unsigned corner = 0; corner < (1u << dims); ++corner) {
        double w = 1.0;
        std::size_t idx = base;
        for (std::size_t i = 0; i < dims; ++i) {
            if (corner & (1u << i)) {
                w *= frac[i];
                idx += stride[i];
            } else {
                w *= 1.0 - frac[i];
            }
        }
        if (w != 0.0) acc += w * snap[idx];
    }
    return acc;
}

double GridValueFn::interpolate(const StateVec& x, double t) const
{
    if (x.size() != static_cast<Eigen::Index>(grid_.axes.size()))
        throw ContractViolation("interpolate: state dimension does not match the grid");
    const double t0 = times_.front(), t1 = times_.back();
    const double tol = 1e-9 * std::max(1.0, t1);
    if (!(t >= t0 - tol && t <= t1 + tol))
        throw OutOfDomainError("interpolate: time " + std::to_string(t) + " outside [" + std::to_string(t0) + ", " +
                               std::to_string(t1) + "]");
    t = std::clamp(t, t0, t1);
    if (times_.size() == 1) return interpolate_snapshot(values_[0], x);
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    if (hi >= times_.size()) hi = times_.size() - 1;
    const std::size_t lo = hi - 1;
    const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
    if (w == 0.0) return interpolate_snapshot(values_[lo], x);
    if (w == 1.0) return interpolate_snapshot(values_[hi], x);
    return (1.0 - w) * interpolate_snapshot(values_[lo], x) + w * interpolate_snapshot(values_[hi], x);
}

ValueSample GridValueFn::evaluate(const StateVec& x, double t) const
{
    ValueSample s;
    s.v = interpolate(x, t);
    s.grad_x.resize(x.size());
    for (std::size_t i = 0; i < grid_.axes.size(); ++i) {
        const auto& a = grid_.axes[i];
        const auto ii = static_cast<Eigen::Index>(i);
        StateVec xp = x, xm = x;
        xp[ii] = std::min(a.hi, std::clamp(x[ii], a.lo, a.hi) + a.spacing());
        xm[ii] = std::max(a.lo, std::clamp(x[ii], a.lo, a.hi) - a.spacing());
        s.grad_x[ii] = (interpolate(xp, t) - interpolate(xm, t)) / (xp[ii] - xm[ii]);
    }
    if (times_.size() > 1) {
        const double tau = times_[1] - times_[0];
        const double tp = std::min(times_.back(), t + tau);
        const double tm = std::max(times_.front(), t - tau);
        s.dv_dt = (interpolate(x, tp) - interpolate(x, tm)) / (tp - tm);
    }
    return s;
}

std::vector<double> GridValueFn::values_at(double t) const
{
    const double tol = 1e-9 * std::max(1.0, times_.back());
    if (!(t >= times_.front() - tol && t <= times_.back() + tol))
        throw OutOfDomainError("brt_volume: time " + std::to_string(t) + " outside the stored range");
    for (std::size_t k = 0; k < times_.size(); ++k)
        if (std::abs(times_[k] - t) <= tol) return values_[k];
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
    std::vector<double> out(values_[lo].size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - w) * values_[lo][k] + w * values_[hi][k];
    return out;
}

double GridValueFn::brt_volume(double t) const
{
    const std::vector<double> v = values_at(t);
    double inside = 0.0, total = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        double w = 1.0;
        for (std::size_t i = 0; i < grid_.axes.size(); ++i) {
            const int idx = static_cast<int>((k / strides_[i]) % static_cast<std::size_t>(grid_.axes[i].count));
            if (idx == 0 || idx == grid_.axes[i].count - 1) w *= 0.5;
        }
        total += w;
        if (v[k] <= 0.0) inside += w;
    }
    return inside / total;
}

// ---------------------------------------------------------------------------

void GridValueFn::save(const std::string& path) const
{
    nlohmann::json header;
    header["format"] = "reachguide-value-grid";
    header["format_version"] = 1;
    header["system"] = system_->name();
    header["tool_version"] = kToolVersion;
    auto& dims = header["dims"] = nlohmann::json::array();
    for (const auto& a : grid_.axes) dims.push_back({a.lo, a.hi, a.count});
    header["times"] = times_;
    header["horizon"] = grid_.horizon;
    header["config_digest"] = digest_string(header["dims"].dump() + header["times"].dump());

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write value grid: " + path);
        out << header.dump() << '\n';
        for (const auto& snap : values_)
            out.write(reinterpret_cast<const char*>(snap.data()), static_cast<std::streamsize>(snap.size() * sizeof(double)));
        if (!out) throw IoError("write failed: " + path);
    }
    commit_file(tmp, path);
}

GridValueFn GridValueFn::load(const std::string& path, SystemPtr system)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open value grid: " + path);
    std::string line;
    std::getline(in, line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt value grid header in " + path + ": " + e.what());
    }
    if (header.value("format", "") != "reachguide-value-grid") throw IoError("not a value grid file: " + path);
    if (header.value("format_version", 0) != 1)
        throw IoError("unsupported value grid format version in " + path);
    if (header.at("system").get<std::string>() != system->name())
        throw ConfigError("value grid " + path + " was computed for system " + header.at("system").get<std::string>() +
                          ", not " + system->name());
    Grid grid;
    for (const auto& d : header.at("dims")) grid.axes.push_back({d[0].get<double>(), d[1].get<double>(), d[2].get<int>()});
    grid.horizon = header.at("horizon").get<double>();
    auto times = header.at("times").get<std::vector<double>>();
    if (header.value("config_digest", "") != digest_string(header["dims"].dump() + header["times"].dump()))
        throw IoError("value grid header digest mismatch in " + path);
    std::vector<std::vector<double>> values(times.size(), std::vector<double>(grid.node_count()));
    for (auto& snap : values) {
        in.read(reinterpret_cast<char*>(snap.data()), static_cast<std::streamsize>(snap.size() * sizeof(double)));
        if (!in) throw IoError("truncated value grid payload in " + path);
    }
    return GridValueFn(std::move(system), std::move(grid), std::move(times), std::move(values));
}

} // namespace reachguide
