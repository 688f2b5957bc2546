#include "forgecl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "forgecl/losses.hpp"
#include "forgecl/rng.hpp"

namespace forgecl {

double fd_max_rel_error(const std::function<double(const ParamVector&)>& fn,
                        const ParamVector& at, const Gradient& analytic, double eps,
                        std::size_t exhaustive_limit, std::size_t min_sample,
                        std::uint64_t seed) {
    require_congruent(at, analytic);
    const std::size_t n = at.size();

    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (n > exhaustive_limit) {
        Rng rng = make_rng(derive_seed(seed, 0x6c));
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(std::max(min_sample, std::size_t{1}));
    }

    double scale = 0.0;
    for (double a : analytic.values) scale = std::max(scale, std::abs(a));

    ParamVector probe = at;
    double max_abs_diff = 0.0, numeric_scale = 0.0;
    for (std::size_t i : coords) {
        const double orig = probe.values[i];
        probe.values[i] = orig + eps;
        const double up = fn(probe);
        probe.values[i] = orig - eps;
        const double down = fn(probe);
        probe.values[i] = orig;
        const double numeric = (up - down) / (2.0 * eps);
        numeric_scale = std::max(numeric_scale, std::abs(numeric));
        max_abs_diff = std::max(max_abs_diff, std::abs(numeric - analytic.values[i]));
    }
    return max_abs_diff / std::max({scale, numeric_scale, 1e-12});
}

double grad_check(const ModelConfig& cfg, std::uint64_t seed, const Batch& batch,
                  const std::vector<int>& labels, double eps) {
    ParamVector params = init_params(cfg, seed);
    ForwardTrace tr = forward(params, cfg, batch);
    Gradient analytic = backward(tr, params, cfg, labels);
    auto fn = [&](const ParamVector& p) {
        return loss_ce(forward(p, cfg, batch).logits, labels);
    };
    return fd_max_rel_error(fn, params, analytic, eps, 2000, 200, seed);
}

}  // namespace forgecl
