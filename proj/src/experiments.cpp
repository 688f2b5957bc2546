#include "forgecl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "forgecl/errors.hpp"
#include "forgecl/losses.hpp"
#include "forgecl/rng.hpp"

namespace forgecl {

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FORGE_CL_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

SequenceSpec draw_sequence(int catalog_size, int seq_len, std::uint64_t draw_seed) {
    if (seq_len > catalog_size)
        throw ConfigError("sequence length exceeds catalog size");
    std::vector<int> idx(static_cast<std::size_t>(catalog_size));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(derive_seed(draw_seed, 0xd0a));
    std::shuffle(idx.begin(), idx.end(), rng);
    SequenceSpec spec;
    spec.draw_seed = draw_seed;
    spec.task_indices.assign(idx.begin(), idx.begin() + seq_len);
    return spec;
}

namespace {

Batch gather_batch(const TaskDataset& ds, const std::vector<int>& indices, std::size_t begin,
                   std::size_t end, std::vector<int>& labels_out) {
    const int B = static_cast<int>(end - begin);
    const int T = ds.steps, C = ds.channels;
    std::vector<double> data(static_cast<std::size_t>(B) * T * C);
    labels_out.resize(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        const int src = indices[begin + static_cast<std::size_t>(b)];
        std::copy_n(ds.sample(src), static_cast<std::size_t>(T) * C,
                    data.begin() + static_cast<std::ptrdiff_t>(b) * T * C);
        labels_out[static_cast<std::size_t>(b)] = ds.labels[static_cast<std::size_t>(src)];
    }
    return make_batch(data.data(), B, T, C);
}

TaskDataset subset(const TaskDataset& ds, const std::vector<int>& indices) {
    TaskDataset out;
    out.task_id = ds.task_id;
    out.n = static_cast<int>(indices.size());
    out.steps = ds.steps;
    out.channels = ds.channels;
    out.meta = ds.meta;
    out.inputs.reserve(static_cast<std::size_t>(out.n) * ds.steps * ds.channels);
    for (int i : indices) {
        out.inputs.insert(out.inputs.end(), ds.sample(i),
                          ds.sample(i) + static_cast<std::size_t>(ds.steps) * ds.channels);
        out.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace

double evaluate_accuracy(const ParamVector& params, const ModelConfig& cfg, const TaskDataset& ds,
                         const std::vector<int>& indices) {
    if (indices.empty()) throw UsageError("evaluate_accuracy with no indices");
    constexpr std::size_t kChunk = 256;
    int correct = 0;
    std::vector<int> labels;
    for (std::size_t begin = 0; begin < indices.size(); begin += kChunk) {
        const std::size_t end = std::min(begin + kChunk, indices.size());
        Batch batch = gather_batch(ds, indices, begin, end, labels);
        std::vector<int> pred = argmax_cols(forward(params, cfg, batch).logits);
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

EvalMatrix run_sequence(StrategyKind kind, const StrategyHyper& hyper, const ModelConfig& cfg,
                        const TrainSpec& spec, const std::vector<const TaskDataset*>& tasks,
                        std::uint64_t seed, StrategyState* final_state) {
    if (tasks.empty()) throw ConfigError("run_sequence needs at least one task");
    cfg.validate();
    const int S = static_cast<int>(tasks.size());
    for (const TaskDataset* t : tasks) {
        t->validate();
        if (t->steps != cfg.seq_len || t->channels != cfg.channels)
            throw ShapeError("task '" + t->task_id + "' window does not match model config");
    }

    // Splits are fixed up front so every phase evaluates the same held-out sets.
    std::vector<std::vector<int>> train_idx(static_cast<std::size_t>(S));
    std::vector<std::vector<int>> held_idx(static_cast<std::size_t>(S));
    for (int j = 0; j < S; ++j) {
        auto [tr, he] = stratified_split(*tasks[static_cast<std::size_t>(j)], spec.train_frac,
                                         derive_seed(seed, 0x5710 + static_cast<std::uint64_t>(j)));
        train_idx[static_cast<std::size_t>(j)] = std::move(tr);
        held_idx[static_cast<std::size_t>(j)] = std::move(he);
    }

    ParamVector params = init_params(cfg, derive_seed(seed, 0x1417));
    StrategyState state = make_state(kind);
    OptState opt;
    opt.kind = spec.optimizer;
    opt.beta2 = spec.adam_beta2;

    EvalMatrix result;
    result.tasks = S;
    result.acc.assign(static_cast<std::size_t>(S) * S, 0.0);

    auto eval_all = [&]() {
        std::vector<double> row(static_cast<std::size_t>(S));
        for (int j = 0; j < S; ++j)
            row[static_cast<std::size_t>(j)] = evaluate_accuracy(
                params, cfg, *tasks[static_cast<std::size_t>(j)], held_idx[static_cast<std::size_t>(j)]);
        return row;
    };

    int global_step = 0;
    for (int phase = 0; phase < S; ++phase) {
        const TaskDataset& task = *tasks[static_cast<std::size_t>(phase)];
        const std::vector<int>& train = train_idx[static_cast<std::size_t>(phase)];

        if (kind == StrategyKind::Lwf && phase > 0) lwf_snapshot_teacher(state, params);
        if (kind == StrategyKind::Si) si_begin_task(state, params);

        Rng shuffle_rng =
            make_rng(derive_seed(seed, 0x8000 + static_cast<std::uint64_t>(phase)));
        std::vector<int> order = train;
        std::vector<int> labels;
        for (int epoch = 0; epoch < spec.epochs_per_task; ++epoch) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            for (std::size_t begin = 0; begin < order.size();
                 begin += static_cast<std::size_t>(spec.batch_size)) {
                const std::size_t end =
                    std::min(begin + static_cast<std::size_t>(spec.batch_size), order.size());
                Batch batch = gather_batch(task, order, begin, end, labels);
                LossResult res = total_loss(kind, hyper, params, cfg, batch, labels, state);
                if (!std::isfinite(res.total))
                    throw TrainingError("non-finite loss in phase " + std::to_string(phase) +
                                        " at step " + std::to_string(global_step));

                clip_global_norm(res.grad, spec.grad_clip);
                std::vector<double> before;
                if (kind == StrategyKind::Si) before = params.values;
                optimizer_step(params, res.grad, opt, spec.learning_rate);
                ++global_step;
                if (kind == StrategyKind::Si) {
                    for (std::size_t i = 0; i < before.size(); ++i)
                        before[i] = params.values[i] - before[i];
                    si_step_accumulate(state, res.grad, before);
                }
                if (spec.eval_every > 0 && global_step % spec.eval_every == 0)
                    result.fine.push_back(eval_all());
            }
        }

        // end-of-task consolidation
        if (kind == StrategyKind::Ewc || kind == StrategyKind::OnlineEwc) {
            TaskDataset fisher_data = subset(task, train);
            FisherDiag fisher = estimate_fisher_diag(
                params, cfg, fisher_data, hyper.fisher_samples,
                derive_seed(seed, 0xf000 + static_cast<std::uint64_t>(phase)),
                hyper.empirical_fisher);
            if (kind == StrategyKind::Ewc)
                consolidate_ewc(state, params, std::move(fisher));
            else
                consolidate_online_ewc(state, params, fisher, hyper.gamma_ewc);
        } else if (kind == StrategyKind::Si) {
            si_consolidate(state, params, hyper.xi_si);
        }

        std::vector<double> row = eval_all();
        for (int j = 0; j < S; ++j) result.at(phase, j) = row[static_cast<std::size_t>(j)];
    }

    if (final_state) *final_state = std::move(state);
    return result;
}

CampaignSummary compute_summary(
    const std::map<StrategyKind, std::vector<EvalMatrix>>& matrices) {
    CampaignSummary summary;
    int S = -1;
    for (const auto& [kind, mats] : matrices) {
        if (mats.empty()) throw UsageError("compute_summary: empty matrix list");
        for (const EvalMatrix& m : mats) {
            if (S < 0) S = m.tasks;
            if (m.tasks != S || m.acc.size() != static_cast<std::size_t>(S) * S)
                throw UsageError("compute_summary: ragged matrices");
        }
    }
    summary.seq_len = S;

    for (const auto& [kind, mats] : matrices) {
        const double inv = 1.0 / static_cast<double>(mats.size());
        StrategySummary ss;
        ss.kind = kind;
        ss.mean_curve.assign(static_cast<std::size_t>(S), 0.0);
        ss.final_row.assign(static_cast<std::size_t>(S), 0.0);
        ss.forgetting.assign(static_cast<std::size_t>(S), 0.0);

        std::vector<double> avg(static_cast<std::size_t>(S) * S, 0.0);
        for (const EvalMatrix& m : mats)
            for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += m.acc[i] * inv;

        for (int i = 0; i < S; ++i) {
            double row_mean = 0.0;
            for (int j = 0; j < S; ++j) row_mean += avg[static_cast<std::size_t>(i) * S + j];
            ss.mean_curve[static_cast<std::size_t>(i)] = row_mean / S;
        }
        for (int j = 0; j < S; ++j) {
            double peak = 0.0;
            for (int i = 0; i < S; ++i)
                peak = std::max(peak, avg[static_cast<std::size_t>(i) * S + j]);
            const double fin = avg[static_cast<std::size_t>(S - 1) * S + j];
            ss.final_row[static_cast<std::size_t>(j)] = fin;
            ss.forgetting[static_cast<std::size_t>(j)] = peak - fin;
        }
        ss.best = *std::max_element(ss.final_row.begin(), ss.final_row.end());
        ss.worst = *std::min_element(ss.final_row.begin(), ss.final_row.end());
        ss.mean = std::accumulate(ss.final_row.begin(), ss.final_row.end(), 0.0) / S;
        summary.strategies.push_back(std::move(ss));
        summary.n_sequences = static_cast<int>(mats.size());
    }
    return summary;
}

CampaignResult run_campaign(const std::vector<StrategyKind>& kinds, const StrategyHyper& hyper,
                            const ModelConfig& cfg, const TrainSpec& spec,
                            const std::vector<TaskDataset>& catalog, int n_sequences, int seq_len,
                            std::uint64_t seed, int n_threads) {
    if (kinds.empty()) throw ConfigError("run_campaign needs at least one strategy");
    if (n_sequences < 1) throw ConfigError("run_campaign needs at least one sequence");

    CampaignResult result;
    for (int s = 0; s < n_sequences; ++s)
        result.sequences.push_back(draw_sequence(static_cast<int>(catalog.size()), seq_len,
                                                 derive_seed(seed, 0xca0 + static_cast<std::uint64_t>(s))));

    struct Job {
        std::size_t kind_idx;
        int seq_idx;
    };
    std::vector<Job> jobs;
    for (std::size_t k = 0; k < kinds.size(); ++k)
        for (int s = 0; s < n_sequences; ++s) jobs.push_back({k, s});

    std::vector<std::vector<EvalMatrix>> slots(
        kinds.size(), std::vector<EvalMatrix>(static_cast<std::size_t>(n_sequences)));

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size() || failed.load()) return;
            const Job job = jobs[j];
            try {
                std::vector<const TaskDataset*> tasks;
                for (int idx : result.sequences[static_cast<std::size_t>(job.seq_idx)].task_indices)
                    tasks.push_back(&catalog[static_cast<std::size_t>(idx)]);
                const std::uint64_t run_seed =
                    derive_seed(seed, 0x12340 + static_cast<std::uint64_t>(job.seq_idx));
                slots[job.kind_idx][static_cast<std::size_t>(job.seq_idx)] =
                    run_sequence(kinds[job.kind_idx], hyper, cfg, spec, tasks, run_seed);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failed.store(true);
                failure = "sequence " + std::to_string(job.seq_idx) + " (" +
                          strategy_name(kinds[job.kind_idx]) + "): " + e.what();
            }
        }
    };

    const int threads = std::min<int>(resolve_thread_count(n_threads),
                                      static_cast<int>(jobs.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw TrainingError(failure);

    for (std::size_t k = 0; k < kinds.size(); ++k)
        result.matrices[kinds[k]] = std::move(slots[k]);
    result.summary = compute_summary(result.matrices);
    result.summary.n_sequences = n_sequences;
    result.summary.seq_len = seq_len;
    return result;
}

}  // namespace forgecl
