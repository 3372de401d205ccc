#include "reachguide/value_function.hpp"

namespace reachguide {

void ValueFunction::values(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts, Eigen::VectorXd& out) const
{
    if (ts.size() != xs.cols()) throw ContractViolation("values: one time per state column required");
    out.resize(xs.cols());
    parallel_for(static_cast<std::size_t>(xs.cols()), [&](std::size_t b, std::size_t e) {
        for (auto k = static_cast<Eigen::Index>(b); k < static_cast<Eigen::Index>(e); ++k)
            out[k] = value(xs.col(k), ts[k]);
    });
}

void ValueFunction::evaluate_batch(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ts, Eigen::VectorXd& v,
                                   Eigen::VectorXd& dv_dt, Eigen::MatrixXd& grad_x) const
{
    if (ts.size() != xs.cols()) throw ContractViolation("evaluate_batch: one time per state column required");
    v.resize(xs.cols());
    dv_dt.resize(xs.cols());
    grad_x.resize(xs.rows(), xs.cols());
    parallel_for(static_cast<std::size_t>(xs.cols()), [&](std::size_t b, std::size_t e) {
        for (auto k = static_cast<Eigen::Index>(b); k < static_cast<Eigen::Index>(e); ++k) {
            const ValueSample s = evaluate(xs.col(k), ts[k]);
            v[k] = s.v;
            dv_dt[k] = s.dv_dt;
            grad_x.col(k) = s.grad_x;
        }
    });
}

} // namespace reachguide
