#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "forgecl/model.hpp"
#include "forgecl/param_vector.hpp"

namespace forgecl {

// Central-difference comparison of an analytic gradient against the scalar
// function it claims to differentiate. Checks all coordinates when the vector
// has at most `exhaustive_limit` entries, otherwise a seeded sample of at
// least `min_sample` coordinates. The returned error is the max absolute
// analytic-vs-numeric difference normalized by the larger gradient infinity
// norm, so near-zero coordinates do not blow it up.
double fd_max_rel_error(const std::function<double(const ParamVector&)>& fn,
                        const ParamVector& at, const Gradient& analytic, double eps,
                        std::size_t exhaustive_limit = 2000, std::size_t min_sample = 200,
                        std::uint64_t seed = 0);

// End-to-end check of the engine's BPTT against finite differences of the
// cross-entropy loss on a freshly initialized net.
double grad_check(const ModelConfig& cfg, std::uint64_t seed, const Batch& batch,
                  const std::vector<int>& labels, double eps);

}  // namespace forgecl
