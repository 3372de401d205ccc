#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "reachguide/valuenet.hpp"

using namespace reachguide;

namespace {

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

LossBatch random_batch(const SystemModel& sys, int n, std::uint64_t seed)
{
    RngStream rng(seed, {77});
    LossBatch b;
    b.x.resize(sys.state_dim(), n);
    b.t.resize(n);
    b.target.resize(n);
    for (int k = 0; k < n; ++k) {
        b.x.col(k) = sys.sample_state(rng);
        b.t[k] = rng.uniform(0.0, sys.horizon());
        b.target[k] = rng.uniform(-1.0, 1.0);
    }
    return b;
}

double loss_at(ValueNet& net, const Eigen::VectorXd& p, const LossBatch& b, LossKind kind)
{
    net.set_params(p);
    return loss_terms(net, b, kind).mean();
}

} // namespace

TEST_CASE("input gradients match finite differences on every system")
{
    for (const auto& name : system_names()) {
        CAPTURE(name);
        auto sys = make_system(name);
        NetConfig cfg;
        cfg.width = 32;
        cfg.init_seed = 5;
        ValueNet net(sys, cfg);
        RngStream rng(11, {1});
        const int n = sys->state_dim();
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const StateVec x = sys->sample_state(rng);
            const double t = rng.uniform(0.0, sys->horizon());
            const ValueSample s = net.evaluate(x, t);
            // central differences in the scaled coordinates
            for (int i = 0; i <= n; ++i) {
                const double h = 1e-5 / net.scaling().scale[i];
                double fd;
                if (i < n) {
                    StateVec xp = x, xm = x;
                    xp[i] += h;
                    xm[i] -= h;
                    // l has kinks; differentiate only the network part
                    fd = (net.value(xp, t) - sys->boundary_l(xp) - net.value(xm, t) + sys->boundary_l(xm)) / (2 * h) +
                         sys->boundary_gradient(x)[i];
                } else {
                    fd = (net.value(x, t + h) - net.value(x, t - h)) / (2 * h);
                }
                const double an = i < n ? s.grad_x[i] : s.dv_dt;
                worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
            }
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("batch evaluation agrees with single-point evaluation")
{
    auto sys = make_system("vertical_drone");
    ValueNet net(sys, NetConfig{});
    LossBatch b = random_batch(*sys, 600, 3);
    Eigen::VectorXd v, vt;
    Eigen::MatrixXd g;
    net.evaluate_batch(b.x, b.t, v, vt, g);
    Eigen::VectorXd only;
    net.values(b.x, b.t, only);
    for (int k = 0; k < 600; k += 37) {
        const ValueSample s = net.evaluate(b.x.col(k), b.t[k]);
        CHECK(std::abs(s.v - v[k]) <= 1e-12);
        CHECK(std::abs(s.v - only[k]) <= 1e-12);
        CHECK(std::abs(s.dv_dt - vt[k]) <= 1e-10);
        CHECK((s.grad_x - g.col(k)).norm() <= 1e-10);
    }
    CHECK_THROWS_AS(net.values(b.x, b.t.head(5), only), ContractViolation);
}

TEST_CASE("parameter gradients match finite differences")
{
    for (const auto& name : system_names()) {
        CAPTURE(name);
        auto sys = make_system(name);
        NetConfig cfg;
        cfg.layers = 2;
        cfg.width = 8;
        cfg.init_seed = 21;
        ValueNet net(sys, cfg);
        LossBatch b = random_batch(*sys, 5, 8);
        // give the finetune branch something to amplify
        Eigen::VectorXd v;
        net.values(b.x, b.t, v);
        b.target[0] = v[0] >= 0 ? -0.3 : v[0] - 0.2;
        b.target[1] = v[1] + 0.4;
        const Eigen::VectorXd p0 = net.params();
        for (LossKind kind : {LossKind::Data, LossKind::Pde, LossKind::DataFinetune}) {
            CAPTURE(static_cast<int>(kind));
            net.set_params(p0);
            const LossResult r = loss_gradients(net, b, kind);
            CHECK(std::abs(r.loss - loss_at(net, p0, b, kind)) <= 1e-12 * std::max(1.0, r.loss));
            Eigen::VectorXd fd(p0.size());
            const double base = loss_at(net, p0, b, kind);
            for (Eigen::Index i = 0; i < p0.size(); ++i) {
                Eigen::VectorXd p = p0;
                p[i] += 1e-6;
                fd[i] = (loss_at(net, p, b, kind) - base) / 1e-6;
            }
            CHECK((r.grad - fd).norm() <= 1e-3 * fd.norm());
        }
    }
}

TEST_CASE("structural boundary condition holds for any parameters")
{
    auto sys = make_system("quadrotor13d");
    ValueNet net(sys, NetConfig{});
    RngStream rng(4, {2});
    Eigen::VectorXd p = net.params();
    for (auto& w : p) w = rng.uniform(-3.0, 3.0);
    net.set_params(p);
    LossBatch b = random_batch(*sys, 10000, 6);
    b.t.setConstant(sys->horizon());
    Eigen::VectorXd v;
    net.values(b.x, b.t, v);
    int exact = 0;
    for (int k = 0; k < 10000; ++k) exact += v[k] == sys->boundary_l(b.x.col(k));
    CHECK(exact == 10000);
}

TEST_CASE("initialisation is deterministic and modest")
{
    auto sys = make_system("f1tenth7d");
    NetConfig cfg;
    cfg.init_seed = 9;
    ValueNet a(sys, cfg), b(sys, cfg);
    CHECK(a.params() == b.params());
    cfg.init_seed = 10;
    ValueNet c(sys, cfg);
    CHECK(a.params() != c.params());
    const Eigen::Index expect = (8 * 128 + 128) + 2 * (128 * 128 + 128) + 129;
    CHECK(a.param_count() == expect);
    RngStream rng(1, {3});
    for (int k = 0; k < 200; ++k) CHECK(std::abs(a.output(sys->sample_state(rng), rng.uniform(0.0, sys->horizon()))) < 5.0);
}

TEST_CASE("zero weights give V = l")
{
    auto sys = make_system("vertical_drone");
    ValueNet net(sys, NetConfig{});
    net.set_params(Eigen::VectorXd::Zero(net.param_count()));
    const StateVec x = Eigen::Vector3d(0.7, -1.0, 8.0);
    const ValueSample s = net.evaluate(x, 0.3);
    CHECK(s.v == sys->boundary_l(x));
    CHECK(s.dv_dt == 0.0);
    CHECK(s.grad_x == sys->boundary_gradient(x));
    CHECK_THROWS_AS(net.set_params(Eigen::VectorXd::Zero(3)), ContractViolation);
}

TEST_CASE("input scaling is a bijection onto the unit cube")
{
    auto sys = make_system("pubsub40d");
    const InputScaling s = InputScaling::for_system(*sys);
    const StateBox& box = sys->state_box();
    CHECK((s.apply(box.lo, 0.0).array() + 1.0).abs().maxCoeff() <= 1e-15);
    CHECK((s.apply(box.hi, sys->horizon()).array() - 1.0).abs().maxCoeff() <= 1e-15);
    RngStream rng(2, {9});
    for (int k = 0; k < 100; ++k) {
        const StateVec x = sys->sample_state(rng);
        const double t = rng.uniform(0.0, sys->horizon());
        const Eigen::VectorXd back = s.invert(s.apply(x, t));
        CHECK((back.head(x.size()) - x).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(back[x.size()] - t) <= 1e-12);
    }
}

TEST_CASE("loss structure")
{
    auto sys = make_system("vertical_drone");
    NetConfig cfg;
    cfg.width = 16;
    ValueNet net(sys, cfg);

    SUBCASE("data loss vanishes on its own prediction")
    {
        LossBatch b = random_batch(*sys, 1, 1);
        b.target[0] = net.value(b.x.col(0), b.t[0]);
        const LossResult r = loss_gradients(net, b, LossKind::Data);
        CHECK(r.loss == 0.0);
        CHECK(r.grad.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("duplicated samples")
    {
        LossBatch b = random_batch(*sys, 300, 2);
        LossBatch d;
        d.x.resize(3, 600);
        d.x << b.x, b.x;
        d.t.resize(600);
        d.t << b.t, b.t;
        d.target.resize(600);
        d.target << b.target, b.target;
        for (LossKind kind : {LossKind::Data, LossKind::Pde}) {
            const LossResult r1 = loss_gradients(net, b, kind);
            const LossResult r2 = loss_gradients(net, d, kind);
            // mean loss: doubling the batch leaves it and its gradient unchanged
            CHECK(std::abs(r1.loss - r2.loss) <= 1e-13 * r1.loss);
            CHECK((r1.grad - r2.grad).norm() <= 1e-12 * r1.grad.norm());
            // summed form scales linearly
            CHECK(std::abs(600 * r2.loss - 2 * 300 * r1.loss) <= 1e-10 * r1.loss * 600);
        }
    }
    SUBCASE("empty batch and mismatched targets")
    {
        LossBatch b;
        b.x.resize(3, 0);
        CHECK_THROWS_AS(loss_gradients(net, b, LossKind::Pde), ContractViolation);
        b = random_batch(*sys, 4, 3);
        b.target.resize(2);
        CHECK_THROWS_AS(loss_gradients(net, b, LossKind::Data), ContractViolation);
    }
}

TEST_CASE("finetune contributions")
{
    CHECK(finetune_term(-0.1, -0.2, 100.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(finetune_term(0.2, -0.1, 100.0) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(finetune_term(0.2, 0.5, 100.0) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("adam")
{
    auto sys = make_system("vertical_drone");
    NetConfig cfg;
    cfg.layers = 1;
    cfg.width = 4;
    ValueNet net(sys, cfg);
    AdamState adam = AdamState::for_net(net, 1e-2);

    SUBCASE("zero gradient")
    {
        const Eigen::VectorXd p = net.params();
        adam.apply(net, Eigen::VectorXd::Zero(net.param_count()));
        CHECK(net.params() == p);
        CHECK(adam.step == 1);
    }
    SUBCASE("constant gradient gives steps of size lr")
    {
        Eigen::VectorXd g = Eigen::VectorXd::Constant(net.param_count(), 0.37);
        g[0] = -5.0;
        for (int k = 0; k < 50; ++k) {
            const Eigen::VectorXd before = net.params();
            adam.apply(net, g);
            const Eigen::VectorXd d = net.params() - before;
            CHECK(std::abs(d[0] - 1e-2) <= 1e-8);
            CHECK(std::abs(d[1] + 1e-2) <= 1e-8);
        }
    }
    SUBCASE("quadratic bowl")
    {
        Eigen::VectorXd target(net.param_count());
        RngStream rng(8, {8});
        for (auto& v : target) v = rng.uniform(-1.0, 1.0);
        const Eigen::VectorXd curv = Eigen::VectorXd::LinSpaced(net.param_count(), 0.5, 4.0);
        int steps = 0;
        while ((net.params() - target).norm() >= 1e-3 && steps < 5000) {
            adam.apply(net, curv.cwiseProduct(net.params() - target));
            ++steps;
        }
        CHECK((net.params() - target).norm() < 1e-3);
        CHECK(steps <= 5000);
    }
    SUBCASE("non-finite gradients are rejected")
    {
        const Eigen::VectorXd p = net.params();
        Eigen::VectorXd g = Eigen::VectorXd::Ones(net.param_count());
        g[2] = std::nan("");
        CHECK_THROWS_AS(adam.apply(net, g), NumericError);
        CHECK(net.params() == p);
        CHECK(adam.step == 0);
        CHECK(adam.m.isZero());
    }
}

TEST_CASE("checkpoint round trip")
{
    auto sys = make_system("vertical_drone");
    NetConfig cfg;
    cfg.width = 24;
    cfg.init_seed = 3;
    ValueNet net(sys, cfg);
    AdamState adam = AdamState::for_net(net, 2e-5);
    LossBatch b = random_batch(*sys, 50, 4);
    for (int k = 0; k < 3; ++k) adam.apply(net, loss_gradients(net, b, LossKind::Pde).grad);

    const std::string p1 = temp_path("rg_ckpt1.bin"), p2 = temp_path("rg_ckpt2.bin");
    save_checkpoint(p1, net, adam, {{"phase", "curriculum"}});
    Checkpoint ck = load_checkpoint(p1, sys);
    save_checkpoint(p2, *ck.net, ck.adam, ck.extra);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(ck.net->params() == net.params());
    CHECK(ck.adam.m == adam.m);
    CHECK(ck.adam.step == 3);
    CHECK(ck.extra["phase"] == "curriculum");
    const StateVec x = Eigen::Vector3d(1.0, 0.5, 6.0);
    const ValueSample s1 = net.evaluate(x, 0.4), s2 = ck.net->evaluate(x, 0.4);
    CHECK(s1.v == s2.v);
    CHECK(s1.dv_dt == s2.dv_dt);
    CHECK(s1.grad_x == s2.grad_x);

    CHECK(read_checkpoint_header(p1)["system"] == "vertical_drone");
    CHECK_THROWS_AS(load_checkpoint(p1, make_system("f1tenth7d")), ConfigError);

    const std::string bytes = slurp(p1);
    std::ofstream(p2, std::ios::binary) << bytes.substr(0, bytes.size() - 9);
    CHECK_THROWS_AS(load_checkpoint(p2, sys), IoError);
    std::ofstream(p2, std::ios::binary) << "garbage\n";
    CHECK_THROWS_AS(load_checkpoint(p2, sys), IoError);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("gradients do not depend on the thread count")
{
    auto sys = make_system("f1tenth7d");
    NetConfig cfg;
    cfg.width = 32;
    ValueNet net(sys, cfg);
    LossBatch b = random_batch(*sys, 1000, 5);
    const int saved = thread_count();
    set_thread_count(1);
    const LossResult r1 = loss_gradients(net, b, LossKind::Pde);
    set_thread_count(4);
    const LossResult r4 = loss_gradients(net, b, LossKind::Pde);
    set_thread_count(saved);
    CHECK(r1.loss == r4.loss);
    CHECK(r1.grad == r4.grad);
}
