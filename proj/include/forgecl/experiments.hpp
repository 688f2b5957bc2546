#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "forgecl/data.hpp"
#include "forgecl/model.hpp"
#include "forgecl/optimizer.hpp"
#include "forgecl/strategies.hpp"

namespace forgecl {

struct TrainSpec {
    int epochs_per_task = 5;
    int batch_size = 100;
    double learning_rate = 0.001;
    int eval_every = 0;  // 0 disables the fine accuracy time series
    double grad_clip = 5.0;  // global L2 norm cap; <= 0 disables clipping
    double adam_beta2 = 0.99;  // faster curvature tracking than the 0.999 textbook value
    OptimizerKind optimizer = OptimizerKind::Adam;
    double train_frac = 0.8;
};

// Tasks drawn without replacement from the catalog.
struct SequenceSpec {
    std::vector<int> task_indices;
    std::uint64_t draw_seed = 0;
};

// acc[phase][task]: held-out accuracy on task j after finishing phase i.
struct EvalMatrix {
    int tasks = 0;
    std::vector<double> acc;

    double& at(int phase, int task) {
        return acc[static_cast<std::size_t>(phase) * tasks + task];
    }
    double at(int phase, int task) const {
        return acc[static_cast<std::size_t>(phase) * tasks + task];
    }

    // optional fine-grained series: one row of per-task accuracies every
    // eval_every optimizer steps
    std::vector<std::vector<double>> fine;
};

struct StrategySummary {
    StrategyKind kind = StrategyKind::None;
    std::vector<double> mean_curve;   // mean-over-tasks accuracy after each phase
    std::vector<double> final_row;    // sequence-averaged final accuracy per task position
    std::vector<double> forgetting;   // per position: peak minus final (sequence-averaged)
    double best = 0.0, mean = 0.0, worst = 0.0;
};

struct CampaignSummary {
    int n_sequences = 0;
    int seq_len = 0;
    std::vector<StrategySummary> strategies;
};

SequenceSpec draw_sequence(int catalog_size, int seq_len, std::uint64_t draw_seed);

// Sequential-task protocol: train on each task in order, evaluate held-out
// accuracy on every task after each phase. Deterministic per seed.
EvalMatrix run_sequence(StrategyKind kind, const StrategyHyper& hyper, const ModelConfig& cfg,
                        const TrainSpec& spec, const std::vector<const TaskDataset*>& tasks,
                        std::uint64_t seed, StrategyState* final_state = nullptr);

CampaignSummary compute_summary(
    const std::map<StrategyKind, std::vector<EvalMatrix>>& matrices);

struct CampaignResult {
    std::vector<SequenceSpec> sequences;
    std::map<StrategyKind, std::vector<EvalMatrix>> matrices;
    CampaignSummary summary;
};

// Every strategy sees the same sequences and the same per-sequence model
// seeds. n_threads <= 0 picks FORGE_CL_THREADS or the hardware count.
CampaignResult run_campaign(const std::vector<StrategyKind>& kinds, const StrategyHyper& hyper,
                            const ModelConfig& cfg, const TrainSpec& spec,
                            const std::vector<TaskDataset>& catalog, int n_sequences, int seq_len,
                            std::uint64_t seed, int n_threads = 0);

double evaluate_accuracy(const ParamVector& params, const ModelConfig& cfg, const TaskDataset& ds,
                         const std::vector<int>& indices);

int resolve_thread_count(int requested);

}  // namespace forgecl
