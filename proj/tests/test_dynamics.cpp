#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "reachguide/dynamics.hpp"

using namespace reachguide;

namespace {

Eigen::VectorXd v(std::initializer_list<double> xs)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) out[i++] = x;
    return out;
}

std::vector<SystemPtr> all_systems()
{
    std::vector<SystemPtr> out;
    for (const auto& n : system_names()) out.push_back(make_system(n));
    return out;
}

ControlVec random_control(const SystemModel& sys, RngStream& rng)
{
    const auto& b = sys.control_bounds();
    ControlVec u(sys.control_dim());
    for (int i = 0; i < sys.control_dim(); ++i) u[i] = rng.uniform(b.lo[i], b.hi[i]);
    return u;
}

} // namespace

TEST_CASE("vertical drone flow")
{
    VerticalDrone drone;
    const StateVec xdot = drone.flow(v({1.5, 0.0, 12.0}), v({1.0}));
    CHECK(xdot[0] == 0.0);
    CHECK(xdot[1] == doctest::Approx(2.2).epsilon(1e-14));
    CHECK(xdot[2] == 0.0);

    const StateVec free_fall = drone.flow(v({0.7, 1.0, 0.0}), v({0.4}));
    CHECK(free_fall[1] == -9.8);
}

TEST_CASE("quadrotor hover thrust cancels gravity")
{
    Quadrotor13D quad;
    StateVec x = StateVec::Zero(13);
    x[3] = 1.0;
    const StateVec xdot = quad.flow(x, v({9.8, 0, 0, 0}));
    CHECK(std::abs(xdot[9]) < 1e-15);
    CHECK(xdot.norm() < 1e-15);
}

TEST_CASE("euler step")
{
    VerticalDrone drone;
    const StateVec next = drone.step_euler(v({1.5, 0.0, 12.0}), v({1.0}), 0.02);
    CHECK(next[0] == 1.5);
    CHECK(next[1] == doctest::Approx(0.044).epsilon(1e-13));
    CHECK(next[2] == 12.0);

    CHECK_THROWS_AS(drone.step_euler(v({1.5, 0.0, 12.0}), v({1.0}), 0.0), ContractViolation);
    CHECK_THROWS_AS(drone.step_euler(v({1.5, 0.0, 12.0}), v({1.0}), -0.1), ContractViolation);
}

TEST_CASE("quadrotor quaternion stays normalised")
{
    Quadrotor13D quad;
    RngStream rng(11, {1});
    for (int trial = 0; trial < 200; ++trial) {
        StateVec x = quad.sample_state(rng);
        for (int s = 0; s < 20; ++s) {
            x = quad.step_euler(x, random_control(quad, rng), 0.02);
            CHECK(std::abs(x.segment<4>(3).norm() - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("euler step converges at first order on the drone")
{
    VerticalDrone drone;
    const StateVec x0 = v({1.0, 0.5, 8.0});
    // u varies with the state so the continuous trajectory is not polynomial
    auto integrate = [&](double dt, int steps) {
        StateVec x = x0;
        for (int i = 0; i < steps; ++i) x = drone.step_euler(x, v({std::sin(3.0 * x[0])}), dt);
        return x;
    };
    const double one_step_err_1 = (drone.step_euler(x0, v({std::sin(3.0 * x0[0])}), 0.02) - integrate(0.01, 2)).norm();
    const double one_step_err_2 = (drone.step_euler(x0, v({std::sin(3.0 * x0[0])}), 0.01) - integrate(0.005, 2)).norm();
    // local discrepancy is O(dt^2): halving dt quarters it
    CHECK(one_step_err_1 / one_step_err_2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("boundary function values")
{
    VerticalDrone drone;
    CHECK(drone.boundary_l(v({1.5, 0, 6})) == 1.5);
    CHECK(drone.boundary_l(v({0.0, 0, 6})) == 0.0);
    CHECK(drone.boundary_l(v({-0.5, 0, 6})) == -0.5);

    Quadrotor13D quad;
    StateVec x = StateVec::Zero(13);
    x[0] = 2.0;
    x[3] = 1.0;
    CHECK(quad.boundary_l(x) == doctest::Approx(1.33).epsilon(1e-14));

    PubSub40D pubsub;
    CHECK(pubsub.boundary_l(StateVec::Zero(40)) == -0.25);
}

TEST_CASE("boundary sign: safe and failure states")
{
    VerticalDrone drone;
    CHECK(drone.boundary_l(v({1.2, 0, 6})) > 0);
    CHECK(drone.boundary_l(v({3.2, 0, 6})) <= 0);

    Quadrotor13D quad;
    StateVec safe = StateVec::Zero(13);
    safe[3] = 1.0;
    safe[0] = 2.5;
    StateVec hit = safe;
    hit[0] = 0.4;
    CHECK(quad.boundary_l(safe) > 0);
    CHECK(quad.boundary_l(hit) <= 0);

    F1Tenth7D car(Track::default_oval());
    StateVec on_track = StateVec::Zero(7);
    on_track.head<2>() = car.track().point_at(3.0);
    on_track[3] = 5.0;
    StateVec off_track = on_track;
    off_track.head<2>() = Eigen::Vector2d(31.25, 25.0);  // infield
    CHECK(car.boundary_l(on_track) == doctest::Approx(2.0));
    CHECK(car.boundary_l(off_track) <= 0);

    PubSub40D pubsub;
    StateVec far = StateVec::Constant(40, 0.9);
    CHECK(pubsub.boundary_l(far) > 0);
    CHECK(pubsub.boundary_l(StateVec::Constant(40, 0.1)) <= 0);
}

TEST_CASE("hamiltonian control examples")
{
    VerticalDrone drone;
    const StateVec x = v({1.0, 0.0, 12.0});
    CHECK(drone.hamiltonian_control(x, v({0, 1, 0}))[0] == 1.0);
    CHECK(drone.hamiltonian_control(x, v({0, -1, 0}))[0] == -1.0);
    CHECK(drone.hamiltonian_control(x, v({1, 0, 0}))[0] == 0.0);
    CHECK(drone.hamiltonian(x, v({0, 1, 0})) == doctest::Approx(2.2).epsilon(1e-14));
    for (const auto& sys : all_systems()) {
        RngStream rng(3, {0});
        CHECK(sys->hamiltonian(sys->sample_state(rng), StateVec::Zero(sys->state_dim())) == 0.0);
    }
}

TEST_CASE("bang-bang control maximises the hamiltonian")
{
    for (const auto& sys : all_systems()) {
        CAPTURE(sys->name());
        RngStream rng(5, {std::hash<std::string>{}(sys->name())});
        for (int trial = 0; trial < 20; ++trial) {
            const StateVec x = sys->sample_state(rng);
            StateVec g(sys->state_dim());
            for (int i = 0; i < g.size(); ++i) g[i] = rng.normal();
            const double h = sys->hamiltonian(x, g);
            for (int s = 0; s < 1000; ++s) {
                const double val = g.dot(sys->flow(x, random_control(*sys, rng)));
                CHECK(h >= val - 1e-12 * std::max(1.0, std::abs(val)));
            }
            // sampled oracle including all corners of the effective control box
            RngStream oracle_rng(6, {static_cast<std::uint64_t>(trial)});
            const int samples = sys->control_dim() > 12 ? 10000 : 2000;
            const ControlVec u_best = sys->sampled_hamiltonian_control(x, g, oracle_rng, samples);
            const double oracle = g.dot(sys->flow(x, u_best));
            CHECK(h >= oracle - 1e-10 * std::max(1.0, std::abs(oracle)));
            if (sys->control_dim() <= 12) CHECK(h == doctest::Approx(oracle).epsilon(1e-10));
        }
    }
}

TEST_CASE("flow equals drift plus input matrix times control")
{
    for (const auto& sys : all_systems()) {
        CAPTURE(sys->name());
        RngStream rng(9, {1});
        for (int trial = 0; trial < 50; ++trial) {
            const StateVec x = sys->sample_state(rng);
            const ControlVec u = sys->clamp_control(x, random_control(*sys, rng));
            const StateVec lhs = sys->flow(x, u);
            const StateVec rhs = sys->drift(x) + sys->input_matrix(x) * u;
            CHECK((lhs - rhs).norm() <= 1e-9 * std::max(1.0, lhs.norm()));
        }
    }
}

TEST_CASE("boundary gradient matches central differences away from kinks")
{
    for (const auto& sys : all_systems()) {
        CAPTURE(sys->name());
        RngStream rng(13, {2});
        int checked = 0;
        for (int trial = 0; trial < 200 && checked < 50; ++trial) {
            const StateVec x = sys->sample_state(rng);
            const StateVec g = sys->boundary_gradient(x);
            StateVec fd(sys->state_dim());
            const double h = 1e-6;
            for (int i = 0; i < sys->state_dim(); ++i) {
                StateVec xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                fd[i] = (sys->boundary_raw({xp.data(), static_cast<std::size_t>(xp.size())}) -
                         sys->boundary_raw({xm.data(), static_cast<std::size_t>(xm.size())})) / (2 * h);
            }
            // skip samples straddling a kink: the two one-sided slopes disagree
            if ((fd - g).norm() > 1e-3 && (fd - g).norm() > 0.1) continue;
            CHECK((fd - g).norm() <= 1e-5 * std::max(1.0, g.norm()));
            ++checked;
        }
        CHECK(checked >= 40);
    }
}

TEST_CASE("f1tenth mode switch at |v| = 0.5")
{
    F1Tenth7D car(Track::default_oval());
    CHECK(car.kinematic_mode(0.5 - 1e-9));
    CHECK_FALSE(car.kinematic_mode(0.5));
    CHECK(car.kinematic_mode(-0.4));

    StateVec x = StateVec::Zero(7);
    x.head<2>() = car.track().point_at(1.0);
    x[2] = 0.1;
    x[6] = 0.3;
    x[3] = 0.5 - 1e-9;
    CHECK(car.flow(x, v({0, 0}))[6] == 0.0);   // kinematic: slip frozen
    x[3] = 0.5;
    CHECK(car.flow(x, v({0, 0}))[6] != 0.0);
}

TEST_CASE("f1tenth acceleration cap")
{
    F1Tenth7D car(Track::default_oval());
    StateVec x = StateVec::Zero(7);
    x.head<2>() = car.track().point_at(1.0);
    x[3] = 4.0;
    CHECK(car.flow(x, v({0, 9.51}))[3] == 9.51);
    x[3] = 7.5;
    CHECK(car.flow(x, v({0, 9.51}))[3] == doctest::Approx(9.51 * 7.319 / 7.5));
    CHECK(car.flow(x, v({0, -9.51}))[3] == doctest::Approx(-9.51 * 7.319 / 7.5));
    x[3] = 8.0;
    CHECK(car.flow(x, v({0, 5.0}))[3] == 0.0);
    CHECK(car.flow(x, v({0, -5.0}))[3] == -5.0);
    x[2] = 0.4189;
    CHECK(car.flow(x, v({2.0, 0}))[2] == 0.0);
}

TEST_CASE("contract and numeric errors")
{
    VerticalDrone drone;
    CHECK_THROWS_AS(drone.flow(v({1, 2}), v({0})), ContractViolation);
    CHECK_THROWS_AS(drone.flow(v({1, 2, 3}), v({0, 1})), ContractViolation);
    CHECK_THROWS_AS(drone.flow(v({1, 2, std::numeric_limits<double>::infinity()}), v({1})), NumericError);
    CHECK_THROWS_AS(make_system("unicycle"), ConfigError);
    SystemOptions opts;
    opts.track_path = "/nonexistent/track.json";
    CHECK_THROWS_AS(make_system("f1tenth7d", opts), IoError);
}

TEST_CASE("track file round trip and nearest-segment index")
{
    const Track oval = Track::default_oval();
    const auto path = std::filesystem::temp_directory_path() / "reachguide_track_test.json";
    oval.save(path.string());
    const Track loaded = Track::load(path.string());
    std::filesystem::remove(path);
    CHECK(loaded.centerline().size() == oval.centerline().size());
    CHECK(loaded.half_width() == oval.half_width());

    RngStream rng(21, {0});
    for (int i = 0; i < 2000; ++i) {
        const Eigen::Vector2d p(rng.uniform(-10, 75), rng.uniform(-10, 60));
        double brute = std::numeric_limits<double>::infinity();
        const auto& pts = oval.centerline();
        for (std::size_t s = 0; s < pts.size(); ++s) {
            const Eigen::Vector2d a = pts[s], b = pts[(s + 1) % pts.size()];
            const double t = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
            brute = std::min(brute, (p - (a + t * (b - a))).norm());
        }
        CHECK(oval.project(p).distance == doctest::Approx(brute).epsilon(1e-14));
    }
    // the default oval fits inside the F1Tenth state box
    for (const auto& p : oval.centerline()) {
        CHECK(p.x() - oval.half_width() >= 0.0);
        CHECK(p.x() + oval.half_width() <= 62.5);
        CHECK(p.y() - oval.half_width() >= 0.0);
        CHECK(p.y() + oval.half_width() <= 50.0);
    }
}
