#include "reachguide/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace reachguide {

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

std::span<const double> cspan(const Eigen::VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

std::span<double> mspan(Eigen::VectorXd& v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// Forward-mode dual number with a fixed number of partials; used for exact
// gradients of the quadrotor boundary function.
template <int N>
struct Dual {
    double v = 0.0;
    Eigen::Matrix<double, N, 1> d = Eigen::Matrix<double, N, 1>::Zero();

    Dual() = default;
    Dual(double value) : v(value) {}
    static Dual var(double value, int i)
    {
        Dual out(value);
        out.d[i] = 1.0;
        return out;
    }
};

template <int N> Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) { Dual<N> r; r.v = a.v + b.v; r.d = a.d + b.d; return r; }
template <int N> Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) { Dual<N> r; r.v = a.v - b.v; r.d = a.d - b.d; return r; }
template <int N> Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) { Dual<N> r; r.v = a.v * b.v; r.d = a.d * b.v + b.d * a.v; return r; }
template <int N> Dual<N> operator*(double s, const Dual<N>& a) { Dual<N> r; r.v = s * a.v; r.d = s * a.d; return r; }
template <int N> Dual<N> operator/(const Dual<N>& a, const Dual<N>& b)
{
    Dual<N> r;
    r.v = a.v / b.v;
    r.d = (a.d * b.v - b.d * a.v) / (b.v * b.v);
    return r;
}
template <int N> Dual<N> dsqrt(const Dual<N>& a)
{
    Dual<N> r;
    r.v = std::sqrt(a.v);
    // zero subgradient at the origin
    r.d = r.v > 0.0 ? Eigen::Matrix<double, N, 1>(a.d / (2.0 * r.v)) : Eigen::Matrix<double, N, 1>::Zero();
    return r;
}

inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual<N>& x) { return x.v; }

// Signed distance from a disk (radius ra, normal q e3 q^-1) to an infinite
// vertical cylinder (radius ro) through the origin.
template <class S>
S quad_boundary(const S& px, const S& py, const S& qw, const S& qx, const S& qy, const S& qz, double ra, double ro)
{
    const S nx = 2.0 * (qw * qy + qx * qz);
    const S ny = 2.0 * (qy * qz - qw * qx);
    const S nz = qw * qw - qx * qx - qy * qy + qz * qz;
    const S r2 = px * px + py * py;
    if (value_of(r2) <= 0.0) return S(-ro);
    const S radial = px * nx + py * ny;
    const S denom = radial * radial + r2 * nz * nz;
    // edge-on disk aligned with the radial direction: full radius reaches the cylinder
    const S reach2 = value_of(denom) > 0.0 ? (ra * ra) * (nz * nz * r2 / denom) : S(ra * ra);
    const S gap = dsqrt(r2) - dsqrt(reach2);
    if (value_of(gap) <= 0.0) return S(-ro);
    return gap - S(ro);
}

template <>
double quad_boundary<double>(const double& px, const double& py, const double& qw, const double& qx,
                             const double& qy, const double& qz, double ra, double ro)
{
    const double nx = 2.0 * (qw * qy + qx * qz);
    const double ny = 2.0 * (qy * qz - qw * qx);
    const double nz = qw * qw - qx * qx - qy * qy + qz * qz;
    const double r2 = px * px + py * py;
    if (r2 <= 0.0) return -ro;
    const double radial = px * nx + py * ny;
    const double denom = radial * radial + r2 * nz * nz;
    const double reach2 = denom > 0.0 ? ra * ra * (nz * nz * r2 / denom) : ra * ra;
    const double gap = std::sqrt(r2) - std::sqrt(reach2);
    return std::max(gap, 0.0) - ro;
}

} // namespace

bool ControlBounds::contains(const ControlVec& u, double tol) const
{
    return u.size() == lo.size() && (u.array() >= lo.array() - tol).all() && (u.array() <= hi.array() + tol).all();
}

bool StateBox::contains(const StateVec& x, double tol) const
{
    return x.size() == lo.size() && (x.array() >= lo.array() - tol).all() && (x.array() <= hi.array() + tol).all();
}

// ---------------------------------------------------------------------------

SystemModel::SystemModel(std::string name, ControlBounds bounds, StateBox box, double horizon)
    : name_(std::move(name)), bounds_(std::move(bounds)), box_(std::move(box)), horizon_(horizon)
{
    if (bounds_.lo.size() != bounds_.hi.size() || (bounds_.lo.array() > bounds_.hi.array()).any())
        throw ConfigError(name_ + ": control bounds need lo <= hi");
    if (box_.lo.size() != box_.hi.size() || (box_.lo.array() > box_.hi.array()).any())
        throw ConfigError(name_ + ": state box needs lo <= hi");
    if (!(horizon_ > 0.0)) throw ConfigError(name_ + ": horizon must be positive");
}

void SystemModel::effective_bounds_into(std::span<const double>, std::span<double> lo, std::span<double> hi) const
{
    std::copy(bounds_.lo.data(), bounds_.lo.data() + bounds_.lo.size(), lo.begin());
    std::copy(bounds_.hi.data(), bounds_.hi.data() + bounds_.hi.size(), hi.begin());
}

void SystemModel::check_state(const StateVec& x, const char* what) const
{
    if (x.size() != state_dim())
        throw ContractViolation(std::string(what) + ": state has dimension " + std::to_string(x.size()) +
                                ", " + name_ + " expects " + std::to_string(state_dim()));
}

ControlBounds SystemModel::effective_bounds(const StateVec& x) const
{
    check_state(x, "effective_bounds");
    ControlBounds eff{Eigen::VectorXd(control_dim()), Eigen::VectorXd(control_dim())};
    effective_bounds_into(cspan(x), mspan(eff.lo), mspan(eff.hi));
    return eff;
}

ControlVec SystemModel::clamp_control(const StateVec& x, const ControlVec& u) const
{
    return effective_bounds(x).clamp(u);
}

StateVec SystemModel::flow(const StateVec& x, const ControlVec& u) const
{
    check_state(x, "flow");
    if (u.size() != control_dim())
        throw ContractViolation("flow: control has dimension " + std::to_string(u.size()) + ", " + name_ +
                                " expects " + std::to_string(control_dim()));
    const ControlVec ue = clamp_control(x, u);
    StateVec xdot(state_dim());
    flow_into(cspan(x), cspan(ue), mspan(xdot));
    if (!xdot.allFinite()) throw NumericError(name_ + ": non-finite dynamics at state " + format_vector(x));
    return xdot;
}

StateVec SystemModel::step_euler(const StateVec& x, const ControlVec& u, double dt) const
{
    if (!(dt > 0.0)) throw ContractViolation("step_euler: dt must be positive");
    StateVec next = x + flow(x, u) * dt;
    project(mspan(next));
    if (!next.allFinite()) throw NumericError(name_ + ": non-finite Euler step from state " + format_vector(x));
    return next;
}

SystemModel::StepScratch SystemModel::make_scratch() const
{
    StepScratch s;
    s.xdot.resize(static_cast<std::size_t>(state_dim()));
    s.lo.resize(static_cast<std::size_t>(control_dim()));
    s.hi.resize(static_cast<std::size_t>(control_dim()));
    s.u.resize(static_cast<std::size_t>(control_dim()));
    return s;
}

bool SystemModel::step_euler_into(std::span<const double> x, std::span<const double> u, double dt,
                                  std::span<double> x_next, StepScratch& s) const
{
    effective_bounds_into(x, s.lo, s.hi);
    for (std::size_t i = 0; i < s.u.size(); ++i) s.u[i] = std::clamp(u[i], s.lo[i], s.hi[i]);
    flow_into(x, s.u, s.xdot);
    bool finite = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x_next[i] = x[i] + s.xdot[i] * dt;
        finite = finite && std::isfinite(x_next[i]);
    }
    project(x_next);
    return finite;
}

double SystemModel::boundary_l(const StateVec& x) const
{
    check_state(x, "boundary_l");
    return boundary_raw(cspan(x));
}

StateVec SystemModel::boundary_gradient(const StateVec& x) const
{
    check_state(x, "boundary_gradient");
    StateVec g = StateVec::Zero(state_dim());
    boundary_gradient_into(cspan(x), mspan(g));
    return g;
}

ControlVec SystemModel::hamiltonian_control(const StateVec& x, const Eigen::VectorXd& grad_v) const
{
    if (!control_affine())
        throw UnsupportedOperation(name_ + " is not control-affine; use sampled_hamiltonian_control");
    check_state(x, "hamiltonian_control");
    if (grad_v.size() != state_dim()) throw ContractViolation("hamiltonian_control: gradient dimension mismatch");
    const ControlBounds eff = effective_bounds(x);
    const Eigen::VectorXd switching = input_matrix(x).transpose() * grad_v;
    ControlVec u(control_dim());
    for (int i = 0; i < control_dim(); ++i) {
        if (switching[i] > 0.0)
            u[i] = eff.hi[i];
        else if (switching[i] < 0.0)
            u[i] = eff.lo[i];
        else
            u[i] = 0.5 * (eff.lo[i] + eff.hi[i]);
    }
    return u;
}

double SystemModel::hamiltonian(const StateVec& x, const Eigen::VectorXd& grad_v) const
{
    return grad_v.dot(flow(x, hamiltonian_control(x, grad_v)));
}

ControlVec SystemModel::sampled_hamiltonian_control(const StateVec& x, const Eigen::VectorXd& grad_v,
                                                    RngStream& rng, int samples) const
{
    check_state(x, "sampled_hamiltonian_control");
    const ControlBounds eff = effective_bounds(x);
    const int m = control_dim();
    ControlVec best = eff.mid();
    double best_val = grad_v.dot(flow(x, best));
    auto consider = [&](const ControlVec& u) {
        const double val = grad_v.dot(flow(x, u));
        if (val > best_val) {
            best_val = val;
            best = u;
        }
    };
    if (m <= 12) {
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
            ControlVec u(m);
            for (int i = 0; i < m; ++i) u[i] = (mask >> i) & 1 ? eff.hi[i] : eff.lo[i];
            consider(u);
        }
    }
    for (int s = 0; s < samples; ++s) {
        ControlVec u(m);
        for (int i = 0; i < m; ++i) u[i] = rng.uniform(eff.lo[i], eff.hi[i]);
        consider(u);
    }
    return best;
}

StateVec SystemModel::sample_state(RngStream& rng) const
{
    StateVec x(state_dim());
    for (int i = 0; i < state_dim(); ++i) x[i] = rng.uniform(box_.lo[i], box_.hi[i]);
    project(mspan(x));
    return x;
}

// ---------------------------------------------------------------------------
// Vertical drone

VerticalDrone::VerticalDrone(double gravity)
    : SystemModel("vertical_drone", {vec({-1.0}), vec({1.0})}, {vec({-0.5, -4.0, 0.0}), vec({3.5, 4.0, 12.0})}, 1.2),
      gravity_(gravity)
{
}

void VerticalDrone::flow_into(std::span<const double> x, std::span<const double> u, std::span<double> xdot) const
{
    xdot[0] = x[1];
    xdot[1] = x[2] * u[0] - gravity_;
    xdot[2] = 0.0;
}

double VerticalDrone::boundary_raw(std::span<const double> x) const
{
    return 1.5 - std::abs(x[0] - 1.5);
}

void VerticalDrone::boundary_gradient_into(std::span<const double> x, std::span<double> grad) const
{
    // subgradient -1 at the kink z = 1.5
    grad[0] = x[0] >= 1.5 ? -1.0 : 1.0;
    grad[1] = 0.0;
    grad[2] = 0.0;
}

StateVec VerticalDrone::drift(const StateVec& x) const
{
    return vec({x[1], -gravity_, 0.0});
}

Eigen::MatrixXd VerticalDrone::input_matrix(const StateVec& x) const
{
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 1);
    g(1, 0) = x[2];
    return g;
}

// ---------------------------------------------------------------------------
// Quadrotor

namespace {
StateBox quad_box()
{
    StateBox b{Eigen::VectorXd(13), Eigen::VectorXd(13)};
    b.lo << -3, -3, -3, -1, -1, -1, -1, -5, -5, -5, -5, -5, -5;
    b.hi << 3, 3, 3, 1, 1, 1, 1, 5, 5, 5, 5, 5, 5;
    return b;
}
} // namespace

Quadrotor13D::Quadrotor13D(QuadrotorParams params)
    : SystemModel("quadrotor13d", {vec({-20.0, -8.0, -8.0, -4.0}), vec({20.0, 8.0, 8.0, 4.0})}, quad_box(), 1.0),
      params_(params)
{
}

void Quadrotor13D::flow_into(std::span<const double> x, std::span<const double> u, std::span<double> xdot) const
{
    const double qw = x[3], qx = x[4], qy = x[5], qz = x[6];
    const double wx = x[10], wy = x[11], wz = x[12];
    const double thrust = params_.ct * u[0] / params_.mass;
    xdot[0] = x[7];
    xdot[1] = x[8];
    xdot[2] = x[9];
    xdot[3] = -(wx * qx) / 2 - (wy * qy) / 2 - (wz * qz) / 2;
    xdot[4] = (wx * qw) / 2 + (wz * qy) / 2 - (wy * qz) / 2;
    xdot[5] = (wy * qw) / 2 - (wz * qx) / 2 + (wx * qz) / 2;
    xdot[6] = (wz * qw) / 2 + (wy * qx) / 2 - (wx * qy) / 2;
    xdot[7] = (2 * qw * qy + 2 * qx * qz) * thrust;
    xdot[8] = (-2 * qw * qx + 2 * qy * qz) * thrust;
    xdot[9] = params_.gz - (2 * qx * qx + 2 * qy * qy - 1) * thrust;
    xdot[10] = u[1] - 5.0 / 9.0 * wy * wz;
    xdot[11] = u[2] + 5.0 / 9.0 * wx * wz;
    xdot[12] = u[3];
}

double Quadrotor13D::boundary_raw(std::span<const double> x) const
{
    return quad_boundary<double>(x[0], x[1], x[3], x[4], x[5], x[6], params_.disk_radius, params_.obstacle_radius);
}

void Quadrotor13D::boundary_gradient_into(std::span<const double> x, std::span<double> grad) const
{
    using D = Dual<6>;
    const D l = quad_boundary<D>(D::var(x[0], 0), D::var(x[1], 1), D::var(x[3], 2), D::var(x[4], 3),
                                 D::var(x[5], 4), D::var(x[6], 5), params_.disk_radius, params_.obstacle_radius);
    std::fill(grad.begin(), grad.end(), 0.0);
    grad[0] = l.d[0];
    grad[1] = l.d[1];
    grad[3] = l.d[2];
    grad[4] = l.d[3];
    grad[5] = l.d[4];
    grad[6] = l.d[5];
}

StateVec Quadrotor13D::drift(const StateVec& x) const
{
    StateVec f(13);
    const Eigen::Vector4d zero = Eigen::Vector4d::Zero();
    flow_into(cspan(x), {zero.data(), 4}, mspan(f));
    return f;
}

Eigen::MatrixXd Quadrotor13D::input_matrix(const StateVec& x) const
{
    const double qw = x[3], qx = x[4], qy = x[5], qz = x[6];
    const double k = params_.ct / params_.mass;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(13, 4);
    g(7, 0) = (2 * qw * qy + 2 * qx * qz) * k;
    g(8, 0) = (-2 * qw * qx + 2 * qy * qz) * k;
    g(9, 0) = -(2 * qx * qx + 2 * qy * qy - 1) * k;
    g(10, 1) = 1.0;
    g(11, 2) = 1.0;
    g(12, 3) = 1.0;
    return g;
}

void Quadrotor13D::project(std::span<double> x) const
{
    const double n = std::sqrt(x[3] * x[3] + x[4] * x[4] + x[5] * x[5] + x[6] * x[6]);
    if (!(n > 0.0) || !std::isfinite(n)) {
        x[3] = 1.0;
        x[4] = x[5] = x[6] = 0.0;
        return;
    }
    for (int i = 3; i < 7; ++i) x[i] /= n;
}

// ---------------------------------------------------------------------------
// F1Tenth

namespace {
StateBox f1_box(const F1TenthParams& p)
{
    StateBox b{Eigen::VectorXd(7), Eigen::VectorXd(7)};
    b.lo << 0.0, 0.0, -p.steer_max, 0.0, -M_PI, -5.0, -0.8;
    b.hi << 62.5, 50.0, p.steer_max, p.v_max, M_PI, 5.0, 0.8;
    return b;
}
} // namespace

F1Tenth7D::F1Tenth7D(Track track, F1TenthParams params)
    : SystemModel("f1tenth7d", {vec({-3.2, -9.51}), vec({3.2, 9.51})}, f1_box(params), 1.0),
      track_(std::move(track)), params_(params)
{
}

void F1Tenth7D::effective_bounds_into(std::span<const double> x, std::span<double> lo, std::span<double> hi) const
{
    SystemModel::effective_bounds_into(x, lo, hi);
    const double steer = x[2];
    const double v = x[3];
    if (steer >= params_.steer_max) hi[0] = std::min(hi[0], 0.0);
    if (steer <= -params_.steer_max) lo[0] = std::max(lo[0], 0.0);
    // power-limited acceleration above the switching speed
    if (v > params_.v_switch) {
        const double cap = control_bounds().hi[1] * params_.v_switch / v;
        hi[1] = std::min(hi[1], cap);
        lo[1] = std::max(lo[1], -cap);
    }
    if (v >= params_.v_max) hi[1] = std::min(hi[1], 0.0);
    if (lo[1] > hi[1]) lo[1] = hi[1];
}

void F1Tenth7D::flow_into(std::span<const double> x, std::span<const double> u, std::span<double> xdot) const
{
    const auto& p = params_;
    const double steer = x[2], v = x[3], yaw = x[4], yaw_rate = x[5], slip = x[6];
    const double steer_rate = u[0], a = u[1];
    const double wheelbase = p.lf + p.lr;
    if (kinematic_mode(v)) {
        const double c = std::cos(steer);
        xdot[0] = v * std::cos(yaw);
        xdot[1] = v * std::sin(yaw);
        xdot[2] = steer_rate;
        xdot[3] = a;
        xdot[4] = v / wheelbase * std::tan(steer);
        xdot[5] = a / wheelbase * std::tan(steer) + v / (wheelbase * c * c) * steer_rate;
        xdot[6] = 0.0;
        return;
    }
    const double front = p.gravity * p.lr - a * p.h_cg;
    const double rear = p.gravity * p.lf + a * p.h_cg;
    const double k = p.mu * p.mass / (p.inertia_z * wheelbase);
    xdot[0] = v * std::cos(yaw + slip);
    xdot[1] = v * std::sin(yaw + slip);
    xdot[2] = steer_rate;
    xdot[3] = a;
    xdot[4] = yaw_rate;
    xdot[5] = -k / v * (p.lf * p.lf * p.c_sf * front + p.lr * p.lr * p.c_sr * rear) * yaw_rate +
              k * (p.lr * p.c_sr * rear - p.lf * p.c_sf * front) * slip + k * p.lf * p.c_sf * front * steer;
    xdot[6] = (p.mu / (v * v * wheelbase) * (p.c_sr * rear * p.lr - p.c_sf * front * p.lf) - 1.0) * yaw_rate -
              p.mu / (v * wheelbase) * (p.c_sr * rear + p.c_sf * front) * slip +
              p.mu / (v * wheelbase) * p.c_sf * front * steer;
}

double F1Tenth7D::boundary_raw(std::span<const double> x) const
{
    return track_.signed_distance({x[0], x[1]});
}

void F1Tenth7D::boundary_gradient_into(std::span<const double> x, std::span<double> grad) const
{
    std::fill(grad.begin(), grad.end(), 0.0);
    const Eigen::Vector2d g = track_.signed_distance_gradient({x[0], x[1]});
    grad[0] = g.x();
    grad[1] = g.y();
}

StateVec F1Tenth7D::drift(const StateVec& x) const
{
    StateVec f(7);
    const double zero[2] = {0.0, 0.0};
    flow_into(cspan(x), zero, mspan(f));
    return f;
}

Eigen::MatrixXd F1Tenth7D::input_matrix(const StateVec& x) const
{
    // Both modes are affine in (steer_rate, accel); unit-control differences
    // recover the columns without truncation error.
    const StateVec f0 = drift(x);
    Eigen::MatrixXd g(7, 2);
    StateVec f(7);
    const double e0[2] = {1.0, 0.0};
    const double e1[2] = {0.0, 1.0};
    flow_into(cspan(x), e0, mspan(f));
    g.col(0) = f - f0;
    flow_into(cspan(x), e1, mspan(f));
    g.col(1) = f - f0;
    return g;
}

// ---------------------------------------------------------------------------
// Publisher-subscriber

PubSub40D::PubSub40D(PubSubParams params)
    : SystemModel("pubsub40d",
                  {Eigen::VectorXd::Constant(params.subscribers, -1.0), Eigen::VectorXd::Constant(params.subscribers, 1.0)},
                  {Eigen::VectorXd::Constant(params.subscribers + 1, -params.box_half_width),
                   Eigen::VectorXd::Constant(params.subscribers + 1, params.box_half_width)},
                  1.0),
      params_(params)
{
}

void PubSub40D::flow_into(std::span<const double> x, std::span<const double> u, std::span<double> xdot) const
{
    const auto& p = params_;
    const double x0 = x[0];
    xdot[0] = p.a * x0 + p.alpha * std::sin(x0) * x0 * x0;
    for (int i = 1; i <= p.subscribers; ++i)
        xdot[i] = -x0 + p.a * x[i] + p.b * u[i - 1] - p.beta * x0 * x[i] * x[i];
}

double PubSub40D::boundary_raw(std::span<const double> x) const
{
    double best = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= params_.subscribers; ++i)
        best = std::min(best, 0.5 * (x[0] * x[0] + x[i] * x[i] - 0.5));
    return best;
}

void PubSub40D::boundary_gradient_into(std::span<const double> x, std::span<double> grad) const
{
    int arg = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= params_.subscribers; ++i) {
        const double v = 0.5 * (x[0] * x[0] + x[i] * x[i] - 0.5);
        if (v < best) {
            best = v;
            arg = i;
        }
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    grad[0] = x[0];
    grad[arg] = x[arg];
}

StateVec PubSub40D::drift(const StateVec& x) const
{
    StateVec f(state_dim());
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(control_dim());
    flow_into(cspan(x), cspan(zero), mspan(f));
    return f;
}

Eigen::MatrixXd PubSub40D::input_matrix(const StateVec&) const
{
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(state_dim(), control_dim());
    for (int i = 0; i < control_dim(); ++i) g(i + 1, i) = params_.b;
    return g;
}

// ---------------------------------------------------------------------------

std::vector<std::string> system_names()
{
    return {"vertical_drone", "quadrotor13d", "f1tenth7d", "pubsub40d"};
}

SystemPtr make_system(const std::string& name, const SystemOptions& options)
{
    if (name == "vertical_drone") return std::make_shared<VerticalDrone>();
    if (name == "quadrotor13d") {
        QuadrotorParams p;
        p.gz = options.quad_gz;
        return std::make_shared<Quadrotor13D>(p);
    }
    if (name == "f1tenth7d") {
        Track track = options.track_path.empty() ? Track::default_oval() : Track::load(options.track_path);
        return std::make_shared<F1Tenth7D>(std::move(track));
    }
    if (name == "pubsub40d") {
        PubSubParams p;
        p.a = options.pubsub_a;
        p.b = options.pubsub_b;
        return std::make_shared<PubSub40D>(p);
    }
    throw ConfigError("unknown system '" + name + "' (expected vertical_drone|quadrotor13d|f1tenth7d|pubsub40d)");
}

} // namespace reachguide
