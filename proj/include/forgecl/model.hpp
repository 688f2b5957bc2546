#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forgecl/param_vector.hpp"

namespace forgecl {

// Stacked-LSTM binary classifier: the flattened input window is consumed as
// seq_len steps of `channels` values; the last timestep's top hidden state
// feeds a dense output layer.
struct ModelConfig {
    int input_dim = 3000;
    int seq_len = 375;
    int channels = 8;
    int hidden_layers = 2;
    int hidden_size = 200;
    int output_dim = 2;
    double learning_rate = 0.001;
    int batch_size = 100;

    void validate() const;
};

// Segment names: lstm<l>.w_x (4H x C_in), lstm<l>.w_h (4H x H), lstm<l>.b (4H),
// out.w (K x H), out.b (K). Gate row order within 4H: input, forget,
// candidate, output.
SegmentMapPtr build_segment_map(const ModelConfig& cfg);

// Minibatch in per-timestep column layout: x[t] is channels x B.
struct Batch {
    int batch() const { return x.empty() ? 0 : static_cast<int>(x[0].cols()); }
    int steps() const { return static_cast<int>(x.size()); }
    std::vector<Eigen::MatrixXd> x;
};

// Builds a Batch from row-major [B, T, C] data.
Batch make_batch(const double* data, int B, int T, int C);

struct LayerTrace {
    // All T matrices of size H x B.
    std::vector<Eigen::MatrixXd> gate_i, gate_f, gate_g, gate_o;
    std::vector<Eigen::MatrixXd> cell, cell_tanh, hidden;
};

struct ForwardTrace {
    Batch input;
    std::vector<LayerTrace> layers;
    Eigen::MatrixXd logits;  // K x B
    std::uint64_t param_fingerprint = 0;
};

// Uniform +-1/sqrt(fan_in) per layer, forget-gate biases 1, other biases 0.
ParamVector init_params(const ModelConfig& cfg, std::uint64_t seed);

ForwardTrace forward(const ParamVector& params, const ModelConfig& cfg, const Batch& batch);

// BPTT from an arbitrary dL/dlogits (K x B). extra_loss_grad, when present,
// is added after the data-loss backprop (penalty terms enter here).
Gradient backward_from_logit_grad(const ForwardTrace& trace, const ParamVector& params,
                                  const ModelConfig& cfg, const Eigen::MatrixXd& dlogits,
                                  const Gradient* extra_loss_grad = nullptr);

// Mean cross-entropy data loss against integer labels.
Gradient backward(const ForwardTrace& trace, const ParamVector& params, const ModelConfig& cfg,
                  const std::vector<int>& labels, const Gradient* extra_loss_grad = nullptr);

}  // namespace forgecl
