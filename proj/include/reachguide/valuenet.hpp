#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachguide/value_function.hpp"

namespace reachguide {

struct NetConfig {
    int layers = 3;          // sine layers; a linear output layer follows
    int width = 128;
    double omega0 = 30.0;
    std::uint64_t init_seed = 0;
    // Training domain: the state box widened on both sides by this fraction of
    // each axis width. Empty means none, one entry applies to every axis.
    std::vector<double> domain_margin;

    void validate() const;
};

void to_json(nlohmann::json& j, const NetConfig& c);
void from_json(const nlohmann::json& j, NetConfig& c);

/// Affine map of (x, t) onto [-1, 1]^(n+1).
struct InputScaling {
    Eigen::VectorXd scale;
    Eigen::VectorXd offset;

    static InputScaling for_box(const StateBox& box, double horizon);
    static InputScaling for_system(const SystemModel& system) { return for_box(system.state_box(), system.horizon()); }
    Eigen::VectorXd apply(const StateVec& x, double t) const;
    /// Inverse map; returns (x, t) stacked.
    Eigen::VectorXd invert(const Eigen::VectorXd& z) const;
};

/// V(x,t) = l(x) + (T - t) * O(x,t), O a sine-activated MLP.
/// Parameters live in one flat vector: per sine layer W (col-major) then b,
/// followed by the output row and bias.
class ValueNet final : public ValueFunction {
public:
    ValueNet(SystemPtr system, NetConfig config);

    const SystemModel& system() const override { return *system_; }
    StateBox domain() const override { return domain_; }
    const SystemPtr& system_ptr() const { return system_; }
    const NetConfig& config() const { return config_; }
    const InputScaling& scaling() const { return scaling_; }
    int input_dim() const { return system_->state_dim() + 1; }

    Eigen::Index param_count() const { return params_.size(); }
    const Eigen::VectorXd& params() const { return params_; }
    void set_params(const Eigen::VectorXd& p);

    /// Raw network output O(x, t).
    double output(const StateVec& x, double t) const;
    double value(const StateVec& x, double t) const override;
    ValueSample evaluate(const StateVec& x, double t) const override;
    void values(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts, Eigen::VectorXd& out) const override;
    void evaluate_batch(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts, Eigen::VectorXd& v,
                        Eigen::VectorXd& dv_dt, Eigen::MatrixXd& grad_x) const override;

    // Layout helpers used by the gradient code.
    struct LayerView {
        Eigen::Index w_offset;
        Eigen::Index b_offset;
        int rows;
        int cols;
    };
    const std::vector<LayerView>& layers() const { return layout_; }
    Eigen::Index out_offset() const { return out_offset_; }

private:
    SystemPtr system_;
    NetConfig config_;
    StateBox domain_;
    InputScaling scaling_;
    std::vector<LayerView> layout_;
    Eigen::Index out_offset_ = 0;
    Eigen::VectorXd params_;
};

using ValueNetPtr = std::shared_ptr<ValueNet>;

// ---------------------------------------------------------------------------
// Losses

struct LossBatch {
    Eigen::MatrixXd x;        // n x B
    Eigen::VectorXd t;        // B
    Eigen::VectorXd target;   // B; dataset labels (unused by the PDE loss)
};

enum class LossKind {
    Data,          // mean |V_hat - V|
    Pde,           // mean |min{D_t V + H, l - V}|
    DataFinetune,  // data loss with false positives amplified by lambda_fp * V
};

struct LossResult {
    double loss = 0.0;
    Eigen::VectorXd grad;
};

/// Per-sample loss contributions (no gradient), for reporting and tests.
Eigen::VectorXd loss_terms(const ValueNet& net, const LossBatch& batch, LossKind kind, double lambda_fp = 100.0);

/// Batch-mean loss and its exact gradient with respect to the parameters.
/// The batch is processed in fixed chunks so results do not depend on thread count.
LossResult loss_gradients(const ValueNet& net, const LossBatch& batch, LossKind kind, double lambda_fp = 100.0);

/// Fine-tune contribution for one sample.
double finetune_term(double v_net, double v_hat, double lambda_fp);

// ---------------------------------------------------------------------------

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::uint64_t step = 0;
    double lr = 2e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_net(const ValueNet& net, double lr);
    /// Rejects non-finite gradients with NumericError and leaves everything unchanged.
    void apply(ValueNet& net, const Eigen::VectorXd& grad);
};

struct Checkpoint {
    ValueNetPtr net;
    AdamState adam;
    nlohmann::json extra;
};

void save_checkpoint(const std::string& path, const ValueNet& net, const AdamState& adam,
                     const nlohmann::json& extra = nlohmann::json::object());
/// Header line only, to learn the system name before constructing it.
nlohmann::json read_checkpoint_header(const std::string& path);
Checkpoint load_checkpoint(const std::string& path, SystemPtr system);

} // namespace reachguide
