#include "reachguide/valuenet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "vecmath.hpp"

namespace reachguide {

void NetConfig::validate() const
{
    if (layers < 1) throw ConfigError("net: layers must be >= 1");
    if (width < 1) throw ConfigError("net: width must be >= 1");
    if (!(omega0 > 0.0)) throw ConfigError("net: omega0 must be positive");
    for (double m : domain_margin)
        if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("net: domain_margin entries must be finite and >= 0");
}

void to_json(nlohmann::json& j, const NetConfig& c)
{
    j = {{"layers", c.layers}, {"width", c.width}, {"omega0", c.omega0}, {"init_seed", c.init_seed}, {"domain_margin", c.domain_margin}};
}

void from_json(const nlohmann::json& j, NetConfig& c)
{
    static const std::set<std::string> known{"layers", "width", "omega0", "init_seed", "domain_margin"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("net config: unknown key '" + key + "'");
    try {
        c.layers = j.value("layers", c.layers);
        c.width = j.value("width", c.width);
        c.omega0 = j.value("omega0", c.omega0);
        c.init_seed = j.value("init_seed", c.init_seed);
        if (j.contains("domain_margin")) {
            const auto& m = j.at("domain_margin");
            c.domain_margin = m.is_number() ? std::vector<double>{m.get<double>()} : m.get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("net config: ") + e.what());
    }
}

InputScaling InputScaling::for_box(const StateBox& box, double horizon)
{
    const int n = box.dim();
    InputScaling s;
    s.scale.resize(n + 1);
    s.offset.resize(n + 1);
    for (int i = 0; i < n; ++i) {
        s.scale[i] = 2.0 / (box.hi[i] - box.lo[i]);
        s.offset[i] = -(box.hi[i] + box.lo[i]) / (box.hi[i] - box.lo[i]);
    }
    s.scale[n] = 2.0 / horizon;
    s.offset[n] = -1.0;
    return s;
}

Eigen::VectorXd InputScaling::apply(const StateVec& x, double t) const
{
    Eigen::VectorXd z(scale.size());
    z.head(x.size()) = scale.head(x.size()).cwiseProduct(x) + offset.head(x.size());
    z[x.size()] = scale[x.size()] * t + offset[x.size()];
    return z;
}

Eigen::VectorXd InputScaling::invert(const Eigen::VectorXd& z) const
{
    return (z - offset).cwiseQuotient(scale);
}

// ---------------------------------------------------------------------------

ValueNet::ValueNet(SystemPtr system, NetConfig config)
    : system_(std::move(system)), config_(config)
{
    config_.validate();
    domain_ = system_->state_box();
    const auto& margin = config_.domain_margin;
    const int n = system_->state_dim();
    if (margin.size() > 1 && static_cast<int>(margin.size()) != n)
        throw ConfigError("net: domain_margin needs 1 or " + std::to_string(n) + " entries");
    Eigen::VectorXd pad = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n && !margin.empty(); ++i)
        pad[i] = margin[margin.size() == 1 ? 0 : static_cast<std::size_t>(i)] * (domain_.hi[i] - domain_.lo[i]);
    domain_.lo -= pad;
    domain_.hi += pad;
    scaling_ = InputScaling::for_box(domain_, system_->horizon());
    Eigen::Index off = 0;
    int fan_in = input_dim();
    for (int l = 0; l < config_.layers; ++l) {
        LayerView v{off, off + static_cast<Eigen::Index>(config_.width) * fan_in, config_.width, fan_in};
        layout_.push_back(v);
        off = v.b_offset + config_.width;
        fan_in = config_.width;
    }
    out_offset_ = off;
    params_.resize(off + config_.width + 1);

    RngStream rng(config_.init_seed, {tag(StreamTag::NetInit)});
    for (int l = 0; l < config_.layers; ++l) {
        const LayerView& v = layout_[static_cast<std::size_t>(l)];
        const double bound = l == 0 ? 1.0 / v.cols : std::sqrt(6.0 / v.cols) / config_.omega0;
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(v.rows) * v.cols; ++k)
            params_[v.w_offset + k] = rng.uniform(-bound, bound);
        const double bb = 1.0 / std::sqrt(static_cast<double>(v.cols));
        for (int k = 0; k < v.rows; ++k) params_[v.b_offset + k] = rng.uniform(-bb, bb);
    }
    const double ob = std::sqrt(6.0 / config_.width) / config_.omega0;
    for (int k = 0; k < config_.width; ++k) params_[out_offset_ + k] = rng.uniform(-ob, ob);
    params_[out_offset_ + config_.width] = 0.0;
}

void ValueNet::set_params(const Eigen::VectorXd& p)
{
    if (p.size() != params_.size()) throw ContractViolation("set_params: parameter count mismatch");
    params_ = p;
}

namespace {

constexpr Eigen::Index kChunk = 256;

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
using Map = Eigen::Map<Eigen::MatrixXd>;

// Values and forward-mode tangents stacked column-wise: [value | d/dz_0 | ... | d/dz_{d-1}],
// each block B columns wide.
struct Trace {
    Eigen::Index batch = 0;
    int tangents = 0;
    std::vector<Eigen::MatrixXd> h;   // h[0] input stack, h[l + 1] output of sine layer l
    std::vector<Eigen::MatrixXd> a;   // pre-activations of sine layer l (including omega0)
    std::vector<Eigen::MatrixXd> c;   // cos of the value block of a[l]
    Eigen::RowVectorXd out;
};

void forward(const ValueNet& net, const Eigen::MatrixXd& z, bool with_tangents, Trace& tr)
{
    const Eigen::Index B = z.cols();
    const int in = net.input_dim();
    const int d = with_tangents ? in : 0;
    const Eigen::Index cols = B * (1 + d);
    const double w0 = net.config().omega0;
    const Eigen::VectorXd& p = net.params();
    tr.batch = B;
    tr.tangents = d;
    tr.h.resize(net.layers().size() + 1);
    tr.a.resize(net.layers().size());
    tr.c.resize(net.layers().size());

    Eigen::MatrixXd& h0 = tr.h[0];
    h0.setZero(in, cols);
    h0.leftCols(B) = z;
    for (int j = 0; j < d; ++j) h0.row(j).segment(B * (1 + j), B).setConstant(net.scaling().scale[j]);

    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const auto& v = net.layers()[l];
        ConstMap W(p.data() + v.w_offset, v.rows, v.cols);
        const auto b = p.segment(v.b_offset, v.rows);
        Eigen::MatrixXd& A = tr.a[l];
        A.noalias() = w0 * (W * tr.h[l]);
        A.leftCols(B).colwise() += w0 * b;
        Eigen::MatrixXd& H = tr.h[l + 1];
        H.resize(v.rows, cols);
        tr.c[l].resize(v.rows, B);
        detail::sin_cos(A.data(), H.data(), tr.c[l].data(), static_cast<std::size_t>(v.rows * B));
        for (int j = 0; j < d; ++j)
            H.middleCols(B * (1 + j), B) = tr.c[l].cwiseProduct(A.middleCols(B * (1 + j), B));
    }
    const auto wout = p.segment(net.out_offset(), net.config().width);
    tr.out.noalias() = wout.transpose() * tr.h.back();
    tr.out.head(B).array() += p[net.out_offset() + net.config().width];
}

// Accumulates dLoss/dtheta given the adjoint of the output stack.
void backward(const ValueNet& net, const Trace& tr, const Eigen::RowVectorXd& seed, Eigen::VectorXd& grad)
{
    const Eigen::Index B = tr.batch;
    const int d = tr.tangents;
    const double w0 = net.config().omega0;
    const Eigen::VectorXd& p = net.params();
    const int width = net.config().width;

    grad.segment(net.out_offset(), width).noalias() += tr.h.back() * seed.transpose();
    grad[net.out_offset() + width] += seed.head(B).sum();
    Eigen::MatrixXd hbar = p.segment(net.out_offset(), width) * seed;

    Eigen::MatrixXd abar;
    for (std::size_t l = net.layers().size(); l-- > 0;) {
        const auto& v = net.layers()[l];
        const Eigen::MatrixXd& A = tr.a[l];
        const Eigen::MatrixXd& C = tr.c[l];
        abar.resize(v.rows, hbar.cols());
        Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(v.rows, B);
        for (int j = 0; j < d; ++j) {
            mix.array() += hbar.middleCols(B * (1 + j), B).array() * A.middleCols(B * (1 + j), B).array();
            abar.middleCols(B * (1 + j), B) = C.cwiseProduct(hbar.middleCols(B * (1 + j), B));
        }
        abar.leftCols(B) = C.cwiseProduct(hbar.leftCols(B)) - tr.h[l + 1].leftCols(B).cwiseProduct(mix);

        Map gW(grad.data() + v.w_offset, v.rows, v.cols);
        gW.noalias() += w0 * (abar * tr.h[l].transpose());
        grad.segment(v.b_offset, v.rows) += w0 * abar.leftCols(B).rowwise().sum();
        if (l > 0) {
            ConstMap W(p.data() + v.w_offset, v.rows, v.cols);
            hbar.noalias() = w0 * (W.transpose() * abar);
        }
    }
}

Eigen::MatrixXd scaled_inputs(const ValueNet& net, const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts,
                              Eigen::Index begin, Eigen::Index count)
{
    const int n = net.system().state_dim();
    const InputScaling& s = net.scaling();
    Eigen::MatrixXd z(n + 1, count);
    for (Eigen::Index k = 0; k < count; ++k) {
        z.col(k).head(n) = s.scale.head(n).cwiseProduct(xs.col(begin + k)) + s.offset.head(n);
        z(n, k) = s.scale[n] * ts[begin + k] + s.offset[n];
    }
    return z;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_batch(const ValueNet& net, const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts)
{
    if (xs.rows() != net.system().state_dim()) throw ContractViolation("value net: state dimension mismatch");
    if (ts.size() != xs.cols()) throw ContractViolation("value net: one time per state column required");
}

std::size_t chunk_count(Eigen::Index n) { return static_cast<std::size_t>((n + kChunk - 1) / kChunk); }

} // namespace

double ValueNet::output(const StateVec& x, double t) const
{
    Trace tr;
    forward(*this, scaling_.apply(x, t), false, tr);
    return tr.out[0];
}

double ValueNet::value(const StateVec& x, double t) const
{
    if (x.size() != system_->state_dim()) throw ContractViolation("value net: state dimension mismatch");
    return system_->boundary_l(x) + (system_->horizon() - t) * output(x, t);
}

ValueSample ValueNet::evaluate(const StateVec& x, double t) const
{
    if (x.size() != system_->state_dim()) throw ContractViolation("value net: state dimension mismatch");
    Trace tr;
    forward(*this, scaling_.apply(x, t), true, tr);
    const int n = system_->state_dim();
    const double tau = system_->horizon() - t;
    ValueSample s;
    const double o = tr.out[0];
    s.v = system_->boundary_l(x) + tau * o;
    s.dv_dt = -o + tau * tr.out[1 + n];
    s.grad_x = system_->boundary_gradient(x);
    for (int i = 0; i < n; ++i) s.grad_x[i] += tau * tr.out[1 + i];
    return s;
}

void ValueNet::values(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts, Eigen::VectorXd& out) const
{
    check_batch(*this, xs, ts);
    out.resize(xs.cols());
    const std::size_t chunks = chunk_count(xs.cols());
    parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
        Trace tr;
        for (std::size_t c = cb; c < ce; ++c) {
            const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunk;
            const Eigen::Index count = std::min(kChunk, xs.cols() - begin);
            forward(*this, scaled_inputs(*this, xs, ts, begin, count), false, tr);
            for (Eigen::Index k = 0; k < count; ++k)
                out[begin + k] = system_->boundary_l(xs.col(begin + k)) + (system_->horizon() - ts[begin + k]) * tr.out[k];
        }
    });
}

void ValueNet::evaluate_batch(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts, Eigen::VectorXd& v,
                              Eigen::VectorXd& dv_dt, Eigen::MatrixXd& grad_x) const
{
    check_batch(*this, xs, ts);
    const int n = system_->state_dim();
    v.resize(xs.cols());
    dv_dt.resize(xs.cols());
    grad_x.resize(n, xs.cols());
    const std::size_t chunks = chunk_count(xs.cols());
    parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
        Trace tr;
        for (std::size_t c = cb; c < ce; ++c) {
            const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunk;
            const Eigen::Index B = std::min(kChunk, xs.cols() - begin);
            forward(*this, scaled_inputs(*this, xs, ts, begin, B), true, tr);
            for (Eigen::Index k = 0; k < B; ++k) {
                const Eigen::Index col = begin + k;
                const double tau = system_->horizon() - ts[col];
                const double o = tr.out[k];
                v[col] = system_->boundary_l(xs.col(col)) + tau * o;
                dv_dt[col] = -o + tau * tr.out[B * (1 + n) + k];
                grad_x.col(col) = system_->boundary_gradient(xs.col(col));
                for (int i = 0; i < n; ++i) grad_x(i, col) += tau * tr.out[B * (1 + i) + k];
            }
        }
    });
}

// ---------------------------------------------------------------------------

double finetune_term(double v_net, double v_hat, double lambda_fp)
{
    const double err = std::abs(v_hat - v_net);
    if (v_net >= 0.0 && v_hat < 0.0) return lambda_fp * err * v_net;
    return err;
}

namespace {

struct ChunkOut {
    std::vector<double> terms;
    Eigen::VectorXd grad;
};

// Loss terms of one chunk and, when grad is requested, the seeds of the output stack.
void chunk_loss(const ValueNet& net, const LossBatch& batch, LossKind kind, double lambda_fp, Eigen::Index begin,
                Eigen::Index B, double weight, bool want_grad, ChunkOut& out)
{
    const SystemModel& sys = net.system();
    const int n = sys.state_dim();
    const double T = sys.horizon();
    const bool pde = kind == LossKind::Pde;
    Trace tr;
    forward(net, scaled_inputs(net, batch.x, batch.t, begin, B), pde, tr);
    Eigen::RowVectorXd seed = Eigen::RowVectorXd::Zero(tr.out.size());
    out.terms.resize(static_cast<std::size_t>(B));
    for (Eigen::Index k = 0; k < B; ++k) {
        const Eigen::Index col = begin + k;
        const StateVec x = batch.x.col(col);
        const double tau = T - batch.t[col];
        const double l = sys.boundary_l(x);
        const double o = tr.out[k];
        const double v = l + tau * o;
        double term = 0.0;
        if (!pde) {
            const double target = batch.target[col];
            double dterm_dv;
            if (kind == LossKind::DataFinetune && v >= 0.0 && target < 0.0) {
                term = finetune_term(v, target, lambda_fp);
                dterm_dv = lambda_fp * (-sgn(target - v) * v + std::abs(target - v));
            } else {
                term = std::abs(target - v);
                dterm_dv = -sgn(target - v);
            }
            seed[k] = weight * dterm_dv * tau;
        } else {
            Eigen::VectorXd grad_v = sys.boundary_gradient(x);
            for (int i = 0; i < n; ++i) grad_v[i] += tau * tr.out[B * (1 + i) + k];
            const double dv_dt = -o + tau * tr.out[B * (1 + n) + k];
            const ControlVec u = sys.hamiltonian_control(x, grad_v);
            const StateVec f = sys.flow(x, u);
            const double r1 = dv_dt + grad_v.dot(f);
            const double r2 = l - v;
            if (r1 < r2) {
                term = std::abs(r1);
                const double w = weight * sgn(r1);
                seed[k] = -w;
                seed[B * (1 + n) + k] = w * tau;
                for (int i = 0; i < n; ++i) seed[B * (1 + i) + k] = w * tau * f[i];
            } else {
                term = std::abs(r2);
                seed[k] = -weight * sgn(r2) * tau;
            }
        }
        if (!std::isfinite(term))
            throw NumericError("loss is not finite at batch element " + std::to_string(col));
        out.terms[static_cast<std::size_t>(k)] = term;
    }
    if (want_grad) {
        out.grad = Eigen::VectorXd::Zero(net.param_count());
        backward(net, tr, seed, out.grad);
    }
}

std::vector<ChunkOut> run_chunks(const ValueNet& net, const LossBatch& batch, LossKind kind, double lambda_fp,
                                 bool want_grad)
{
    const Eigen::Index total = batch.x.cols();
    if (total == 0) throw ContractViolation("loss: empty batch");
    check_batch(net, batch.x, batch.t);
    if (kind != LossKind::Pde && batch.target.size() != total)
        throw ContractViolation("loss: one target per sample required");
    const std::size_t chunks = chunk_count(total);
    std::vector<ChunkOut> outs(chunks);
    const double weight = 1.0 / static_cast<double>(total);
    parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
        for (std::size_t c = cb; c < ce; ++c) {
            const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunk;
            chunk_loss(net, batch, kind, lambda_fp, begin, std::min(kChunk, total - begin), weight, want_grad, outs[c]);
        }
    });
    return outs;
}

Eigen::VectorXd tree_sum(std::vector<ChunkOut>& outs, std::size_t lo, std::size_t hi)
{
    if (hi - lo == 1) return std::move(outs[lo].grad);
    const std::size_t mid = lo + (hi - lo) / 2;
    Eigen::VectorXd a = tree_sum(outs, lo, mid);
    a += tree_sum(outs, mid, hi);
    return a;
}

} // namespace

Eigen::VectorXd loss_terms(const ValueNet& net, const LossBatch& batch, LossKind kind, double lambda_fp)
{
    std::vector<ChunkOut> outs = run_chunks(net, batch, kind, lambda_fp, false);
    Eigen::VectorXd terms(batch.x.cols());
    Eigen::Index k = 0;
    for (const auto& o : outs)
        for (double v : o.terms) terms[k++] = v;
    return terms;
}

LossResult loss_gradients(const ValueNet& net, const LossBatch& batch, LossKind kind, double lambda_fp)
{
    std::vector<ChunkOut> outs = run_chunks(net, batch, kind, lambda_fp, true);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(batch.x.cols()));
    for (const auto& o : outs) terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    LossResult r;
    r.loss = pairwise_sum(terms) / static_cast<double>(terms.size());
    r.grad = tree_sum(outs, 0, outs.size());
    return r;
}

// ---------------------------------------------------------------------------

AdamState AdamState::for_net(const ValueNet& net, double lr)
{
    AdamState a;
    a.m = Eigen::VectorXd::Zero(net.param_count());
    a.v = Eigen::VectorXd::Zero(net.param_count());
    a.lr = lr;
    return a;
}

void AdamState::apply(ValueNet& net, const Eigen::VectorXd& grad)
{
    if (grad.size() != net.param_count() || m.size() != grad.size())
        throw ContractViolation("adam: gradient length does not match the parameters");
    if (!grad.allFinite()) throw NumericError("adam: non-finite gradient rejected at step " + std::to_string(step));
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    Eigen::VectorXd p = net.params();
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    net.set_params(p);
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json checkpoint_header(const ValueNet& net, const AdamState& adam, const nlohmann::json& extra)
{
    const auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return {{"format", "reachguide-ckpt"},
            {"format_version", 1},
            {"tool_version", kToolVersion},
            {"system", net.system().name()},
            {"net", net.config()},
            {"param_count", net.param_count()},
            {"scaling", {{"scale", vec(net.scaling().scale)}, {"offset", vec(net.scaling().offset)}}},
            {"adam",
             {{"step", adam.step}, {"lr", adam.lr}, {"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}}},
            {"extra", extra}};
}

} // namespace

void save_checkpoint(const std::string& path, const ValueNet& net, const AdamState& adam, const nlohmann::json& extra)
{
    if (adam.m.size() != net.param_count() || adam.v.size() != net.param_count())
        throw ContractViolation("checkpoint: optimizer state does not match the net");
    std::string text = checkpoint_header(net, adam, extra).dump() + "\n";
    for (const Eigen::VectorXd* v : {&net.params(), &adam.m, &adam.v})
        text.append(reinterpret_cast<const char*>(v->data()), static_cast<std::size_t>(v->size()) * sizeof(double));
    write_text_atomic(path, text);
}

nlohmann::json read_checkpoint_header(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string line;
    std::getline(in, line);
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt checkpoint header in " + path + ": " + e.what());
    }
    if (h.value("format", "") != "reachguide-ckpt") throw IoError("not a checkpoint file: " + path);
    if (h.value("format_version", 0) != 1) throw IoError("unsupported checkpoint format version in " + path);
    return h;
}

Checkpoint load_checkpoint(const std::string& path, SystemPtr system)
{
    const nlohmann::json h = read_checkpoint_header(path);
    const std::string name = h.at("system").get<std::string>();
    if (name != system->name())
        throw ConfigError("checkpoint " + path + " belongs to system " + name + ", not " + system->name());
    Checkpoint ck;
    try {
        ck.net = std::make_shared<ValueNet>(system, h.at("net").get<NetConfig>());
        if (h.at("param_count").get<Eigen::Index>() != ck.net->param_count())
            throw IoError("checkpoint parameter count does not match its config: " + path);
        const auto scale = h.at("scaling").at("scale").get<std::vector<double>>();
        const auto offset = h.at("scaling").at("offset").get<std::vector<double>>();
        const InputScaling& s = ck.net->scaling();
        if (scale.size() != static_cast<std::size_t>(s.scale.size()) ||
            !std::equal(scale.begin(), scale.end(), s.scale.data()) ||
            !std::equal(offset.begin(), offset.end(), s.offset.data()))
            throw ConfigError("checkpoint input scaling differs from the system box: " + path);
        const auto& a = h.at("adam");
        ck.adam = AdamState::for_net(*ck.net, a.at("lr").get<double>());
        ck.adam.step = a.at("step").get<std::uint64_t>();
        ck.adam.beta1 = a.at("beta1").get<double>();
        ck.adam.beta2 = a.at("beta2").get<double>();
        ck.adam.eps = a.at("eps").get<double>();
        ck.extra = h.value("extra", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint header in " + path + ": " + e.what());
    }
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::getline(in, line);
    Eigen::VectorXd p(ck.net->param_count());
    for (Eigen::VectorXd* v : {&p, &ck.adam.m, &ck.adam.v}) {
        in.read(reinterpret_cast<char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
        if (!in) throw IoError("truncated checkpoint payload in " + path);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in checkpoint " + path);
    if (!p.allFinite()) throw IoError("checkpoint holds non-finite parameters: " + path);
    ck.net->set_params(p);
    return ck;
}

} // namespace reachguide
