#pragma once

#include <Eigen/Dense>
#include <vector>

namespace forgecl {

// Columns are batch items throughout (logits are K x B).

// Row-stabilized softmax over each column.
Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& logits);

// Mean softmax cross-entropy over the batch.
double loss_ce(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

// d(mean CE)/dlogits = (softmax - onehot) / B.
Eigen::MatrixXd loss_ce_grad(const Eigen::MatrixXd& logits, const std::vector<int>& labels);

// softmax(logits / temperature); each column sums to 1.
Eigen::MatrixXd softened_probs(const Eigen::MatrixXd& logits, double temperature);

// Mean over the batch of -sum_k p_target(k) * log softmax(logits/T)(k).
double soft_cross_entropy(const Eigen::MatrixXd& target_probs, const Eigen::MatrixXd& logits,
                          double temperature);

// Gradient of soft_cross_entropy w.r.t. logits: (softmax(z/T) - p_target)/(T*B).
Eigen::MatrixXd soft_cross_entropy_grad(const Eigen::MatrixXd& target_probs,
                                        const Eigen::MatrixXd& logits, double temperature);

std::vector<int> argmax_cols(const Eigen::MatrixXd& logits);

}  // namespace forgecl
