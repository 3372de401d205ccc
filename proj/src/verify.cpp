#include "reachguide/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include <boost/math/distributions/binomial.hpp>

#include "reachguide/gridsolver.hpp"

namespace reachguide {

namespace {

constexpr Eigen::Index kSampleChunk = 65536;
constexpr Eigen::Index kRolloutChunk = 4096;

std::span<double> col_span(Eigen::MatrixXd& m, Eigen::Index c)
{
    return {m.data() + c * m.rows(), static_cast<std::size_t>(m.rows())};
}

Eigen::MatrixXd uniform_states(const SystemModel& system, std::uint64_t seed, StreamTag t, std::uint64_t chunk,
                               Eigen::Index count)
{
    RngStream rng(seed, {tag(t), chunk});
    Eigen::MatrixXd xs(system.state_dim(), count);
    for (Eigen::Index k = 0; k < count; ++k) xs.col(k) = system.sample_state(rng);
    return xs;
}

Eigen::MatrixXd clamp_columns(const ValueFunction& value, const Eigen::MatrixXd& xs)
{
    const StateBox box = value.domain();
    return xs.cwiseMax(box.lo.replicate(1, xs.cols())).cwiseMin(box.hi.replicate(1, xs.cols()));
}

double elapsed_us(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - since).count();
}

} // namespace

void VerifyConfig::validate() const
{
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("verify: epsilon must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("verify: beta must lie in (0, 1)");
    if (m_volume < 1 || m_calib < 1 || m_accuracy < 1) throw ConfigError("verify: sample counts must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("verify: dt must be positive");
    if (!(oversample_cap >= 1.0)) throw ConfigError("verify: oversample_cap must be >= 1");
}

void to_json(nlohmann::json& j, const VerifyConfig& c)
{
    j = {{"epsilon", c.epsilon},   {"beta", c.beta},         {"m_volume", c.m_volume},
         {"m_calib", c.m_calib},   {"m_accuracy", c.m_accuracy}, {"dt", c.dt},
         {"horizon", c.horizon},   {"oversample_cap", c.oversample_cap}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, VerifyConfig& c)
{
    nlohmann::json defaults;
    to_json(defaults, c);
    for (const auto& [key, _] : j.items())
        if (!defaults.contains(key)) throw ConfigError("verify config: unknown key '" + key + "'");
    try {
        c.epsilon = j.value("epsilon", c.epsilon);
        c.beta = j.value("beta", c.beta);
        c.m_volume = j.value("m_volume", c.m_volume);
        c.m_calib = j.value("m_calib", c.m_calib);
        c.m_accuracy = j.value("m_accuracy", c.m_accuracy);
        c.dt = j.value("dt", c.dt);
        c.horizon = j.value("horizon", c.horizon);
        c.oversample_cap = j.value("oversample_cap", c.oversample_cap);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("verify config: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

double clamp_time(const ValueFunction& value, double t)
{
    return std::clamp(t, 0.0, value.system().horizon());
}

StateVec clamp_to_domain(const ValueFunction& value, const StateVec& x)
{
    const StateBox box = value.domain();
    return x.cwiseMax(box.lo).cwiseMin(box.hi);
}

ControlVec ValuePolicy::control(const StateVec& x, double t) const
{
    const ValueSample s = value_.evaluate(clamp_to_domain(value_, x), clamp_time(value_, t));
    return value_.system().hamiltonian_control(x, s.grad_x);
}

MpcPolicy::MpcPolicy(const SystemModel& system, MpcConfig config, double horizon)
    : system_(system), config_(config), horizon_(horizon > 0.0 ? horizon : system.horizon())
{
    config_.validate();
}

ControlVec MpcPolicy::control(const StateVec& x, double) const
{
    // Receding horizon: the dynamics are time invariant, so every solve starts at t = 0.
    const PointResult r = solve_point(system_, config_, 0.0, x, warm_, nullptr, calls_++, horizon_);
    if (r.best.controls.empty()) return system_.control_bounds().mid();
    warm_.assign(r.best.controls.begin() + 1, r.best.controls.end());
    warm_.push_back(r.best.controls.back());
    return r.best.controls.front();
}

PurePursuitPolicy::PurePursuitPolicy(const SystemModel& system, double target_speed, double lookahead)
    : system_(system), target_speed_(target_speed), lookahead_(lookahead)
{
    if (!dynamic_cast<const F1Tenth7D*>(&system)) throw ConfigError("pure pursuit needs the f1tenth7d system");
    if (!(lookahead > 0.0)) throw ConfigError("pure pursuit: lookahead must be positive");
}

ControlVec PurePursuitPolicy::control(const StateVec& x, double) const
{
    const auto& car = static_cast<const F1Tenth7D&>(system_);
    const Track& track = car.track();
    const Eigen::Vector2d p(x[0], x[1]);
    const Eigen::Vector2d target = track.point_at(track.project(p).arc_length + lookahead_);
    const double heading = std::atan2(target.y() - p.y(), target.x() - p.x());
    const double alpha = std::remainder(heading - x[4], 2.0 * M_PI);
    const double wheelbase = car.params().lf + car.params().lr;
    const double steer = std::atan(2.0 * wheelbase * std::sin(alpha) / lookahead_);
    ControlVec u(2);
    u[0] = 5.0 * (steer - x[2]);
    u[1] = 3.0 * (target_speed_ - x[3]);
    return system_.clamp_control(x, u);
}

// ---------------------------------------------------------------------------

FilterResult safety_filter(const SystemModel& system, const ValueSample& value, const ControlVec& u_nom,
                           const StateVec& x, double gamma)
{
    const ControlBounds box = system.effective_bounds(x);
    const Eigen::VectorXd a = system.input_matrix(x).transpose() * value.grad_x;
    const double c = value.grad_x.dot(system.drift(x)) + value.dv_dt + gamma * value.v;
    const ControlVec u0 = box.clamp(u_nom);
    FilterResult out;
    if (c + a.dot(u0) >= 0.0) {
        out.u = u0;
        return out;
    }
    out.modified = true;
    const ControlVec u_star = system.hamiltonian_control(x, value.grad_x);
    if (c + a.dot(u_star) < 0.0) {
        out.u = u_star;
        out.feasible = false;
        return out;
    }
    // g(mu) = c + a . clamp(u0 + mu a) is piecewise linear and non-decreasing;
    // walk its breakpoints to the root.
    std::vector<double> breaks;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] > 0.0) breaks.push_back((box.hi[i] - u0[i]) / a[i]);
        else if (a[i] < 0.0) breaks.push_back((box.lo[i] - u0[i]) / a[i]);
    }
    std::sort(breaks.begin(), breaks.end());
    const auto at = [&](double mu) { return box.clamp(u0 + mu * a); };
    double mu = 0.0;
    double g = c + a.dot(u0);
    double root = breaks.empty() ? 0.0 : breaks.back();
    for (double next : breaks) {
        if (next <= mu) continue;
        double slope = 0.0;
        const ControlVec um = at(0.5 * (mu + next));
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (um[i] > box.lo[i] && um[i] < box.hi[i]) slope += a[i] * a[i];
        const double g_next = c + a.dot(at(next));
        if (g_next >= 0.0) {
            root = slope > 0.0 ? mu - g / slope : next;
            root = std::clamp(root, mu, next);
            break;
        }
        mu = next;
        g = g_next;
    }
    out.u = at(root);
    // Round-off can leave a residual of a few ulps on the wrong side. The nudge
    // doubles because a step below one ulp of u leaves u unchanged.
    if (c + a.dot(out.u) < 0.0) {
        const ControlVec base = out.u;
        double free_norm = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (base[i] > box.lo[i] && base[i] < box.hi[i]) free_norm += a[i] * a[i];
        double step = 2.0 * -(c + a.dot(base)) / (free_norm > 0.0 ? free_norm : a.squaredNorm());
        for (int it = 0; it < 64 && c + a.dot(out.u) < 0.0; ++it, step *= 2.0) out.u = box.clamp(base + step * a);
        if (c + a.dot(out.u) < 0.0) out.u = u_star;
    }
    return out;
}

FilterResult safety_filter(const SystemModel& system, const ValueFunction& value, const ControlVec& u_nom,
                           const StateVec& x, double t, double gamma)
{
    return safety_filter(system, value.evaluate(clamp_to_domain(value, x), clamp_time(value, t)), u_nom, x, gamma);
}

ControlVec FilteredPolicy::control(const StateVec& x, double t) const
{
    return safety_filter(value_.system(), value_, nominal_.control(x, t), x, t, gamma_).u;
}

// ---------------------------------------------------------------------------

RolloutResult rollout(const SystemModel& system, const ControlPolicy& policy, const StateVec& x0, double t0, double dt,
                      double horizon, bool stop_on_collision)
{
    if (!(dt > 0.0)) throw ContractViolation("rollout: dt must be positive");
    policy.reset();
    const int steps = static_cast<int>(std::lround(horizon / dt));
    RolloutResult r;
    r.trajectory.t0 = t0;
    r.trajectory.dt = dt;
    r.trajectory.states.push_back(x0);
    r.min_l = system.boundary_l(x0);
    double total_us = 0.0;
    for (int h = 0; h < steps; ++h) {
        if (stop_on_collision && r.min_l <= 0.0) break;
        const StateVec& x = r.trajectory.states.back();
        const auto started = std::chrono::steady_clock::now();
        const ControlVec u = system.clamp_control(x, policy.control(x, t0 + h * dt));
        const double us = elapsed_us(started);
        total_us += us;
        r.max_step_us = std::max(r.max_step_us, us);
        StateVec next;
        try {
            next = system.step_euler(x, u, dt);
        } catch (const NumericError&) {
            r.valid = false;
            break;
        }
        r.distance += std::hypot(next[0] - x[0], next.size() > 1 ? next[1] - x[1] : 0.0);
        r.trajectory.controls.push_back(u);
        r.trajectory.states.push_back(next);
        r.min_l = std::min(r.min_l, system.boundary_l(next));
    }
    r.collided = r.min_l <= 0.0;
    if (!r.trajectory.controls.empty()) r.mean_step_us = total_us / static_cast<double>(r.trajectory.controls.size());
    return r;
}

RolloutResult rollout_policy(const SystemModel& system, const ValueFunction& value, const StateVec& x0, double t0,
                             double dt, double horizon)
{
    return rollout(system, ValuePolicy(value), x0, t0, dt, horizon);
}

std::vector<char> rollout_unsafe_batch(const SystemModel& system, const ValueFunction& value,
                                       const Eigen::MatrixXd& starts, double t0, double dt, double horizon)
{
    if (!(dt > 0.0)) throw ContractViolation("rollout: dt must be positive");
    const int steps = static_cast<int>(std::lround(horizon / dt));
    std::vector<char> unsafe(static_cast<std::size_t>(starts.cols()), 0);
    for (Eigen::Index begin = 0; begin < starts.cols(); begin += kRolloutChunk) {
        const Eigen::Index count = std::min(kRolloutChunk, starts.cols() - begin);
        Eigen::MatrixXd xs = starts.middleCols(begin, count);
        Eigen::MatrixXd next(xs.rows(), count);
        for (Eigen::Index k = 0; k < count; ++k)
            if (system.boundary_raw(col_span(xs, k)) <= 0.0) unsafe[static_cast<std::size_t>(begin + k)] = 1;
        Eigen::VectorXd v, vt;
        Eigen::MatrixXd grads;
        for (int h = 0; h < steps; ++h) {
            const double t = clamp_time(value, t0 + h * dt);
            value.evaluate_batch(clamp_columns(value, xs), Eigen::VectorXd::Constant(count, t), v, vt, grads);
            parallel_for(static_cast<std::size_t>(count), [&](std::size_t b, std::size_t e) {
                SystemModel::StepScratch scratch = system.make_scratch();
                for (std::size_t k = b; k < e; ++k) {
                    const auto kk = static_cast<Eigen::Index>(k);
                    char& flag = unsafe[static_cast<std::size_t>(begin) + k];
                    if (flag) {
                        next.col(kk) = xs.col(kk);
                        continue;
                    }
                    const ControlVec u = system.hamiltonian_control(xs.col(kk), grads.col(kk));
                    const bool finite = system.step_euler_into(col_span(xs, kk), {u.data(), static_cast<std::size_t>(u.size())},
                                                               dt, col_span(next, kk), scratch);
                    if (!finite || system.boundary_raw(col_span(next, kk)) <= 0.0) {
                        flag = 1;
                        if (!finite) next.col(kk) = xs.col(kk);
                    }
                }
            });
            xs.swap(next);
        }
    }
    return unsafe;
}

// ---------------------------------------------------------------------------

double clopper_pearson_upper(std::size_t k, std::size_t m, double beta)
{
    if (m == 0 || k >= m) return 1.0;
    return boost::math::binomial_distribution<double>::find_upper_bound_on_p(
        static_cast<double>(m), static_cast<double>(k), beta);
}

DeltaSearch search_delta(const std::vector<CalibrationSample>& samples, double epsilon, double beta)
{
    std::vector<double> scores;
    std::vector<double> bad;
    scores.reserve(samples.size());
    for (const auto& s : samples) {
        scores.push_back(s.score);
        if (s.unsafe) bad.push_back(s.score);
    }
    std::sort(scores.begin(), scores.end());
    std::sort(bad.begin(), bad.end());
    const auto above = [](const std::vector<double>& v, double d) {
        return static_cast<std::size_t>(v.end() - std::upper_bound(v.begin(), v.end(), d));
    };
    std::vector<double> candidates{0.0};
    for (double b : bad)
        if (b > 0.0) candidates.push_back(b);
    DeltaSearch out;
    for (double d : candidates) {
        const std::size_t m = above(scores, d);
        const std::size_t k = above(bad, d);
        const double bound = clopper_pearson_upper(k, m, beta);
        if (m > 0 && bound <= epsilon) {
            out.delta = d;
            out.retained = m;
            out.violations = k;
            out.bound = bound;
            out.feasible = true;
            return out;
        }
    }
    return out;
}

nlohmann::json VerifyResult::to_json() const
{
    // JSON has no infinity; an empty verified set is written as null.
    nlohmann::json d = std::isfinite(delta) ? nlohmann::json(delta) : nlohmann::json(nullptr);
    return {{"delta", d},
            {"verified_empty", !std::isfinite(delta)},
            {"volume", volume},
            {"volume_se", volume_se},
            {"calibration", calibration},
            {"unsafe_total", unsafe_total},
            {"retained", retained},
            {"violations", violations},
            {"bound", bound},
            {"unsafe_scores", unsafe_scores}};
}

VerifyResult conformal_delta(const SystemModel& system, const ValueFunction& value, const VerifyConfig& config)
{
    config.validate();
    const auto want = static_cast<Eigen::Index>(config.m_calib);
    const auto budget = static_cast<Eigen::Index>(std::ceil(config.oversample_cap * config.m_calib));
    Eigen::MatrixXd accepted(system.state_dim(), want);
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(want));
    Eigen::Index drawn = 0;
    std::uint64_t chunk = 0;
    Eigen::VectorXd v;
    while (static_cast<Eigen::Index>(scores.size()) < want && drawn < budget) {
        const Eigen::Index count = std::min(kSampleChunk, budget - drawn);
        const Eigen::MatrixXd xs = uniform_states(system, config.seed, StreamTag::Calibration, chunk++, count);
        value.values(xs, Eigen::VectorXd::Zero(count), v);
        for (Eigen::Index k = 0; k < count && static_cast<Eigen::Index>(scores.size()) < want; ++k) {
            if (v[k] > 0.0) {
                accepted.col(static_cast<Eigen::Index>(scores.size())) = xs.col(k);
                scores.push_back(v[k]);
            }
        }
        drawn += count;
    }
    VerifyResult r;
    if (scores.empty()) return r;   // nothing is claimed safe
    if (static_cast<Eigen::Index>(scores.size()) < want)
        throw ConfigError("verify: only " + std::to_string(scores.size()) + " of " + std::to_string(want) +
                          " calibration states have V > 0 after " + std::to_string(budget) +
                          " draws; the claimed-safe set is too small for this calibration budget");

    const std::vector<char> unsafe =
        rollout_unsafe_batch(system, value, accepted, 0.0, config.dt, config.rollout_horizon(system));
    std::vector<CalibrationSample> samples(scores.size());
    for (std::size_t k = 0; k < scores.size(); ++k) {
        samples[k] = {scores[k], unsafe[k] != 0};
        if (unsafe[k]) r.unsafe_scores.push_back(scores[k]);
    }
    std::sort(r.unsafe_scores.begin(), r.unsafe_scores.end());
    const DeltaSearch d = search_delta(samples, config.epsilon, config.beta);
    r.delta = d.delta;
    r.calibration = samples.size();
    r.unsafe_total = r.unsafe_scores.size();
    r.retained = d.retained;
    r.violations = d.violations;
    r.bound = d.bound;
    return r;
}

double recovered_volume(const SystemModel& system, const ValueFunction& value, double delta,
                        const VerifyConfig& config, double* standard_error)
{
    config.validate();
    double p;
    if (delta == std::numeric_limits<double>::infinity()) {
        p = 0.0;
    } else if (delta == -std::numeric_limits<double>::infinity()) {
        p = 1.0;
    } else {
        std::size_t inside = 0;
        Eigen::VectorXd v;
        std::uint64_t chunk = 0;
        for (Eigen::Index begin = 0; begin < config.m_volume; begin += kSampleChunk) {
            const Eigen::Index count = std::min<Eigen::Index>(kSampleChunk, config.m_volume - begin);
            const Eigen::MatrixXd xs = uniform_states(system, config.seed, StreamTag::Volume, chunk++, count);
            value.values(xs, Eigen::VectorXd::Zero(count), v);
            inside += static_cast<std::size_t>((v.array() > delta).count());
        }
        p = static_cast<double>(inside) / config.m_volume;
    }
    if (standard_error) *standard_error = std::sqrt(p * (1.0 - p) / config.m_volume);
    return p;
}

VerifyResult verify(const SystemModel& system, const ValueFunction& value, const VerifyConfig& config)
{
    VerifyResult r = conformal_delta(system, value, config);
    r.volume = recovered_volume(system, value, r.delta, config, &r.volume_se);
    return r;
}

AccuracyMetrics accuracy_metrics(const ValueFunction& value, const GridValueFn& oracle, const VerifyConfig& config)
{
    config.validate();
    const SystemModel& system = value.system();
    if (oracle.system().name() != system.name())
        throw ConfigError("accuracy: oracle is for " + oracle.system().name() + ", value for " + system.name());
    const StateBox ob = oracle.domain();
    const StateBox& box = system.state_box();
    const double tol = 1e-9 * (box.hi - box.lo).maxCoeff();
    if ((ob.lo.array() > box.lo.array() + tol).any() || (ob.hi.array() < box.hi.array() - tol).any())
        throw ConfigError("accuracy: the oracle grid does not cover the state box");

    std::vector<double> sq;
    sq.reserve(static_cast<std::size_t>(config.m_accuracy));
    AccuracyMetrics m;
    std::size_t fp = 0;
    Eigen::VectorXd v, g;
    std::uint64_t chunk = 0;
    for (Eigen::Index begin = 0; begin < config.m_accuracy; begin += kSampleChunk) {
        const Eigen::Index count = std::min<Eigen::Index>(kSampleChunk, config.m_accuracy - begin);
        const Eigen::MatrixXd xs = uniform_states(system, config.seed, StreamTag::Accuracy, chunk++, count);
        const Eigen::VectorXd ts = Eigen::VectorXd::Zero(count);
        value.values(xs, ts, v);
        oracle.values(clamp_columns(oracle, xs), ts, g);
        for (Eigen::Index k = 0; k < count; ++k) {
            sq.push_back((v[k] - g[k]) * (v[k] - g[k]));
            if (g[k] <= 0.0) {
                ++m.oracle_unsafe;
                if (v[k] > 0.0) ++fp;
            }
        }
    }
    m.samples = sq.size();
    m.mse = pairwise_sum(sq) / static_cast<double>(sq.size());
    m.false_positive_rate = m.oracle_unsafe ? static_cast<double>(fp) / m.oracle_unsafe : 0.0;
    return m;
}

// ---------------------------------------------------------------------------

std::vector<PolicyStats> evaluate_policies(const SystemModel& system, const std::vector<const ControlPolicy*>& policies,
                                           const Eigen::MatrixXd& starts, double dt, double horizon)
{
    std::vector<PolicyStats> out;
    for (const ControlPolicy* p : policies) {
        PolicyStats s;
        s.name = p->name();
        s.runs = static_cast<std::size_t>(starts.cols());
        std::size_t collided = 0;
        double distance = 0.0, step_us = 0.0;
        for (Eigen::Index k = 0; k < starts.cols(); ++k) {
            const RolloutResult r = rollout(system, *p, starts.col(k), 0.0, dt, horizon, true);
            collided += r.collided || !r.valid;
            distance += r.distance;
            step_us += r.mean_step_us;
        }
        if (s.runs > 0) {
            s.collision_rate = static_cast<double>(collided) / s.runs;
            s.safe_fraction = 1.0 - s.collision_rate;
            s.mean_distance = distance / s.runs;
            s.mean_step_us = step_us / s.runs;
        }
        out.push_back(s);
    }
    return out;
}

std::string policy_table_csv(const std::vector<PolicyStats>& rows)
{
    std::string text = "policy,runs,safe_fraction,collision_rate,mean_distance,mean_step_us\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.4f,%.3f\n", r.name.c_str(), r.runs, r.safe_fraction,
                      r.collision_rate, r.mean_distance, r.mean_step_us);
        text += buf;
    }
    return text;
}

} // namespace reachguide
