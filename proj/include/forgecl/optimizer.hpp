#pragma once

#include <cstdint>
#include <vector>

#include "forgecl/param_vector.hpp"

namespace forgecl {

enum class OptimizerKind { Adam, Sgd };

struct OptState {
    OptimizerKind kind = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<double> m, v;  // empty until the first step
};

// In-place update; throws TrainingError naming the step index on a
// non-finite gradient.
void optimizer_step(ParamVector& params, const Gradient& grad, OptState& state,
                    double learning_rate);

// Rescale grad in place so its L2 norm is at most max_norm. No-op when
// max_norm <= 0 or the gradient is already within bounds.
void clip_global_norm(Gradient& grad, double max_norm);

}  // namespace forgecl
