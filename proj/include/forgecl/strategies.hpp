#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forgecl/losses.hpp"
#include "forgecl/model.hpp"
#include "forgecl/param_vector.hpp"

namespace forgecl {

struct TaskDataset;

enum class StrategyKind { None, Ewc, OnlineEwc, Si, Lwf };

const char* strategy_name(StrategyKind k);
std::optional<StrategyKind> parse_strategy(const std::string& name);

struct StrategyHyper {
    double lambda_ewc = 1'000'000.0;
    double gamma_ewc = 10.0;
    double c_si = 300.0;
    double xi_si = 1e-3;       // SI denominator damping
    double t_lwf = 10.0;
    double r_lwf = 1.0;        // distillation weight
    int fisher_samples = 1024;
    bool empirical_fisher = false;  // use ground-truth labels instead of sampled ones
};

// Diagonal Fisher estimate; elementwise nonnegative.
struct FisherDiag {
    std::vector<double> values;
};

// Persistent per-strategy knowledge carried across tasks.
struct StrategyState {
    StrategyKind kind = StrategyKind::None;

    // EWC: one (anchor, fisher) per completed task.
    // OnlineEWC: at most one running pair (gamma-decayed fisher).
    std::vector<ParamVector> anchors;
    std::vector<FisherDiag> fishers;

    // SI
    std::vector<double> si_omega;      // running path integral, reset per task
    std::vector<double> si_importance; // consolidated Omega, nonnegative
    std::optional<ParamVector> si_anchor;
    std::optional<ParamVector> si_task_start;

    // LwF
    std::optional<ParamVector> teacher;

    std::size_t completed_tasks = 0;
};

StrategyState make_state(StrategyKind kind);

// Monte-Carlo true-Fisher diagonal: labels sampled from the model's own
// predictive distribution (empirical variant uses dataset labels).
FisherDiag estimate_fisher_diag(const ParamVector& params, const ModelConfig& cfg,
                                const TaskDataset& dataset, int n_samples, std::uint64_t seed,
                                bool empirical = false);

struct Penalty {
    double value = 0.0;
    Gradient grad;
};

Penalty penalty_ewc(const ParamVector& params, const StrategyState& state, double lambda);
Penalty penalty_online_ewc(const ParamVector& params, const StrategyState& state, double lambda);
Penalty penalty_si(const ParamVector& params, const StrategyState& state, double c);

void consolidate_ewc(StrategyState& state, const ParamVector& params_after_task,
                     FisherDiag fisher_of_task);
void consolidate_online_ewc(StrategyState& state, const ParamVector& params_after_task,
                            const FisherDiag& fisher_of_task, double gamma);

// Once per optimizer step: omega_i += -g_i * dtheta_i.
void si_begin_task(StrategyState& state, const ParamVector& params_at_task_start);
void si_step_accumulate(StrategyState& state, const Gradient& grad_of_total_loss,
                        const std::vector<double>& delta_theta);
void si_consolidate(StrategyState& state, const ParamVector& params_at_task_end);
void si_consolidate(StrategyState& state, const ParamVector& params_at_task_end, double xi);

void lwf_snapshot_teacher(StrategyState& state, const ParamVector& params);

struct LossResult {
    double total = 0.0;
    double data_loss = 0.0;
    double penalty = 0.0;
    Gradient grad;
};

// Distillation total: CE(student, labels) + r * t^2 * CE(soft teacher, soft student),
// both on the same new-task batch. Without a teacher this is plain CE.
LossResult lwf_loss(const ParamVector& params, const ModelConfig& cfg, const Batch& batch,
                    const std::vector<int>& labels, const StrategyState& state, double temperature,
                    double r);

// Dispatch: data loss plus the strategy's penalty (Eq. 1-4 totals). The
// zero-coefficient and empty-state paths return gradients bitwise identical
// to the plain baseline.
LossResult total_loss(StrategyKind kind, const StrategyHyper& hyper, const ParamVector& params,
                      const ModelConfig& cfg, const Batch& batch, const std::vector<int>& labels,
                      const StrategyState& state);

// Versioned binary checkpoint (see README for the layout).
void save_state(const StrategyState& state, const std::string& path);
StrategyState load_state(const std::string& path, const ModelConfig& cfg);

}  // namespace forgecl
