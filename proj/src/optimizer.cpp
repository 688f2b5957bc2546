#include "forgecl/optimizer.hpp"

#include <cmath>

#include "forgecl/errors.hpp"

namespace forgecl {

void optimizer_step(ParamVector& params, const Gradient& grad, OptState& state,
                    double learning_rate) {
    require_congruent(params, grad);
    const std::size_t n = params.values.size();
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(grad.values[i]))
            throw TrainingError("non-finite gradient at coordinate " + std::to_string(i) +
                                " on optimizer step " + std::to_string(state.step + 1));

    state.step += 1;
    if (state.kind == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < n; ++i) params.values[i] -= learning_rate * grad.values[i];
        return;
    }

    if (state.m.empty()) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
    }
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad.values[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params.values[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.eps);
    }
}

void clip_global_norm(Gradient& grad, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (double g : grad.values) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (double& g : grad.values) g *= scale;
}

}  // namespace forgecl
