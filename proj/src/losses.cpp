#include "forgecl/losses.hpp"

#include <cmath>

#include "forgecl/errors.hpp"
#include "forgecl/model.hpp"

namespace forgecl {

namespace {

void check_labels(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != logits.cols())
        throw ShapeError("label count does not match batch size");
    for (int y : labels)
        if (y < 0 || y >= logits.rows())
            throw DataError("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(logits.rows()) + ")");
}

// log softmax per column, stabilized.
Eigen::MatrixXd log_softmax_cols(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd shifted = logits.rowwise() - logits.colwise().maxCoeff();
    Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log();
    return shifted.rowwise() - lse;
}

}  // namespace

Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd e = (logits.rowwise() - logits.colwise().maxCoeff()).array().exp();
    Eigen::RowVectorXd sums = e.colwise().sum();
    return e.array().rowwise() / sums.array();
}

double loss_ce(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    Eigen::MatrixXd lp = log_softmax_cols(logits);
    double total = 0.0;
    for (Eigen::Index n = 0; n < logits.cols(); ++n)
        total -= lp(labels[static_cast<std::size_t>(n)], n);
    return total / static_cast<double>(logits.cols());
}

Eigen::MatrixXd loss_ce_grad(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    Eigen::MatrixXd g = softmax_cols(logits);
    for (Eigen::Index n = 0; n < logits.cols(); ++n)
        g(labels[static_cast<std::size_t>(n)], n) -= 1.0;
    return g / static_cast<double>(logits.cols());
}

Eigen::MatrixXd softened_probs(const Eigen::MatrixXd& logits, double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    return softmax_cols(logits / temperature);
}

double soft_cross_entropy(const Eigen::MatrixXd& target_probs, const Eigen::MatrixXd& logits,
                          double temperature) {
    if (target_probs.rows() != logits.rows() || target_probs.cols() != logits.cols())
        throw ShapeError("target/logit shape mismatch in soft cross-entropy");
    Eigen::MatrixXd lp = log_softmax_cols(logits / temperature);
    double total = -(target_probs.array() * lp.array()).sum();
    return total / static_cast<double>(logits.cols());
}

Eigen::MatrixXd soft_cross_entropy_grad(const Eigen::MatrixXd& target_probs,
                                        const Eigen::MatrixXd& logits, double temperature) {
    Eigen::MatrixXd q = softmax_cols(logits / temperature);
    return (q - target_probs) / (temperature * static_cast<double>(logits.cols()));
}

std::vector<int> argmax_cols(const Eigen::MatrixXd& logits) {
    std::vector<int> out(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index n = 0; n < logits.cols(); ++n) {
        Eigen::Index best;
        logits.col(n).maxCoeff(&best);
        out[static_cast<std::size_t>(n)] = static_cast<int>(best);
    }
    return out;
}

Gradient backward(const ForwardTrace& trace, const ParamVector& params, const ModelConfig& cfg,
                  const std::vector<int>& labels, const Gradient* extra_loss_grad) {
    return backward_from_logit_grad(trace, params, cfg, loss_ce_grad(trace.logits, labels),
                                    extra_loss_grad);
}

}  // namespace forgecl
