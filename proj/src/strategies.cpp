#include "forgecl/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "forgecl/data.hpp"
#include "forgecl/errors.hpp"
#include "forgecl/rng.hpp"

namespace forgecl {

const char* strategy_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::None: return "none";
        case StrategyKind::Ewc: return "ewc";
        case StrategyKind::OnlineEwc: return "online-ewc";
        case StrategyKind::Si: return "si";
        case StrategyKind::Lwf: return "lwf";
    }
    return "?";
}

std::optional<StrategyKind> parse_strategy(const std::string& name) {
    if (name == "none") return StrategyKind::None;
    if (name == "ewc") return StrategyKind::Ewc;
    if (name == "online-ewc" || name == "online_ewc") return StrategyKind::OnlineEwc;
    if (name == "si") return StrategyKind::Si;
    if (name == "lwf") return StrategyKind::Lwf;
    return std::nullopt;
}

StrategyState make_state(StrategyKind kind) {
    StrategyState s;
    s.kind = kind;
    return s;
}

namespace {

void require_kind(const StrategyState& state, StrategyKind kind, const char* op) {
    if (state.kind != kind)
        throw UsageError(std::string(op) + " called on a " + strategy_name(state.kind) + " state");
}

void require_anchor_shape(const ParamVector& params, const ParamVector& anchor,
                          const std::vector<double>& fisher) {
    if (anchor.values.size() != params.values.size() || fisher.size() != params.values.size())
        throw StateError("anchor/fisher length does not match parameter vector");
}

// value = coef * sum_i f_i (th_i - a_i)^2 ; grad = 2 coef * f (th - a)
void accumulate_quadratic(const ParamVector& params, const ParamVector& anchor,
                          const std::vector<double>& weights, double coef, Penalty& out) {
    require_anchor_shape(params, anchor, weights);
    double v = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double d = params.values[i] - anchor.values[i];
        v += weights[i] * d * d;
        out.grad.values[i] += 2.0 * coef * weights[i] * d;
    }
    out.value += coef * v;
}

}  // namespace

FisherDiag estimate_fisher_diag(const ParamVector& params, const ModelConfig& cfg,
                                const TaskDataset& dataset, int n_samples, std::uint64_t seed,
                                bool empirical) {
    if (dataset.n <= 0) throw DataError("fisher estimation on an empty dataset");
    if (n_samples < 1) throw ConfigError("fisher n_samples must be >= 1");
    if (dataset.steps != cfg.seq_len || dataset.channels != cfg.channels)
        throw ShapeError("dataset window does not match model config");

    Rng rng = make_rng(derive_seed(seed, 0xf15));
    std::uniform_int_distribution<int> pick(0, dataset.n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    FisherDiag fisher;
    fisher.values.assign(params.values.size(), 0.0);
    for (int s = 0; s < n_samples; ++s) {
        const int idx = pick(rng);
        Batch one = make_batch(dataset.sample(idx), 1, cfg.seq_len, cfg.channels);
        ForwardTrace tr = forward(params, cfg, one);
        Eigen::MatrixXd probs = softmax_cols(tr.logits);

        int label;
        if (empirical) {
            label = dataset.labels[static_cast<std::size_t>(idx)];
        } else {
            double u = unit(rng), acc = 0.0;
            label = cfg.output_dim - 1;
            for (int k = 0; k < cfg.output_dim; ++k) {
                acc += probs(k, 0);
                if (u < acc) {
                    label = k;
                    break;
                }
            }
        }

        // d(-log p(label))/dlogits for a single sample
        Eigen::MatrixXd dlogits = probs;
        dlogits(label, 0) -= 1.0;
        Gradient g = backward_from_logit_grad(tr, params, cfg, dlogits);
        for (std::size_t i = 0; i < fisher.values.size(); ++i)
            fisher.values[i] += g.values[i] * g.values[i];
    }
    const double inv = 1.0 / static_cast<double>(n_samples);
    for (double& v : fisher.values) v *= inv;
    return fisher;
}

Penalty penalty_ewc(const ParamVector& params, const StrategyState& state, double lambda) {
    require_kind(state, StrategyKind::Ewc, "penalty_ewc");
    Penalty p;
    p.grad = Gradient(params.map);
    if (lambda == 0.0) return p;
    for (std::size_t t = 0; t < state.anchors.size(); ++t)
        accumulate_quadratic(params, state.anchors[t], state.fishers[t].values, lambda, p);
    return p;
}

Penalty penalty_online_ewc(const ParamVector& params, const StrategyState& state, double lambda) {
    require_kind(state, StrategyKind::OnlineEwc, "penalty_online_ewc");
    Penalty p;
    p.grad = Gradient(params.map);
    if (lambda == 0.0 || state.anchors.empty()) return p;
    accumulate_quadratic(params, state.anchors[0], state.fishers[0].values, lambda, p);
    return p;
}

Penalty penalty_si(const ParamVector& params, const StrategyState& state, double c) {
    require_kind(state, StrategyKind::Si, "penalty_si");
    Penalty p;
    p.grad = Gradient(params.map);
    if (c == 0.0 || !state.si_anchor) return p;
    accumulate_quadratic(params, *state.si_anchor, state.si_importance, c, p);
    return p;
}

void consolidate_ewc(StrategyState& state, const ParamVector& params_after_task,
                     FisherDiag fisher_of_task) {
    require_kind(state, StrategyKind::Ewc, "consolidate_ewc");
    if (fisher_of_task.values.size() != params_after_task.values.size())
        throw StateError("fisher length mismatch at consolidation");
    state.anchors.push_back(params_after_task);  // deep copy
    state.fishers.push_back(std::move(fisher_of_task));
    state.completed_tasks += 1;
}

void consolidate_online_ewc(StrategyState& state, const ParamVector& params_after_task,
                            const FisherDiag& fisher_of_task, double gamma) {
    require_kind(state, StrategyKind::OnlineEwc, "consolidate_online_ewc");
    for (double v : fisher_of_task.values)
        if (v < 0.0) throw StateError("negative fisher element at consolidation");
    if (state.anchors.empty()) {
        state.anchors.push_back(params_after_task);
        state.fishers.push_back(fisher_of_task);
    } else {
        if (fisher_of_task.values.size() != state.fishers[0].values.size())
            throw StateError("fisher length mismatch at consolidation");
        for (std::size_t i = 0; i < fisher_of_task.values.size(); ++i)
            state.fishers[0].values[i] =
                gamma * state.fishers[0].values[i] + fisher_of_task.values[i];
        state.anchors[0] = params_after_task;
    }
    state.completed_tasks += 1;
}

void si_begin_task(StrategyState& state, const ParamVector& params_at_task_start) {
    require_kind(state, StrategyKind::Si, "si_begin_task");
    const std::size_t n = params_at_task_start.values.size();
    if (state.si_omega.empty()) state.si_omega.assign(n, 0.0);
    if (state.si_importance.empty()) state.si_importance.assign(n, 0.0);
    std::fill(state.si_omega.begin(), state.si_omega.end(), 0.0);
    state.si_task_start = params_at_task_start;
}

void si_step_accumulate(StrategyState& state, const Gradient& grad_of_total_loss,
                        const std::vector<double>& delta_theta) {
    require_kind(state, StrategyKind::Si, "si_step_accumulate");
    if (grad_of_total_loss.values.size() != delta_theta.size() ||
        state.si_omega.size() != delta_theta.size())
        throw StateError("SI accumulator shape mismatch");
    for (std::size_t i = 0; i < delta_theta.size(); ++i)
        state.si_omega[i] -= grad_of_total_loss.values[i] * delta_theta[i];
}

void si_consolidate(StrategyState& state, const ParamVector& params_at_task_end) {
    si_consolidate(state, params_at_task_end, 1e-3);
}

void si_consolidate(StrategyState& state, const ParamVector& params_at_task_end, double xi) {
    require_kind(state, StrategyKind::Si, "si_consolidate");
    if (!state.si_task_start) throw UsageError("si_consolidate without si_begin_task");
    if (!(xi > 0.0)) throw ConfigError("SI damping xi must be positive");
    const std::size_t n = params_at_task_end.values.size();
    if (state.si_omega.size() != n || state.si_task_start->values.size() != n)
        throw StateError("SI state shape mismatch at consolidation");
    for (std::size_t i = 0; i < n; ++i) {
        const double moved = params_at_task_end.values[i] - state.si_task_start->values[i];
        const double contrib = std::max(state.si_omega[i], 0.0) / (moved * moved + xi);
        state.si_importance[i] += contrib;
        state.si_omega[i] = 0.0;
    }
    state.si_anchor = params_at_task_end;
    state.si_task_start = params_at_task_end;
    state.completed_tasks += 1;
}

void lwf_snapshot_teacher(StrategyState& state, const ParamVector& params) {
    require_kind(state, StrategyKind::Lwf, "lwf_snapshot_teacher");
    state.teacher = params;  // deep copy, frozen
}

LossResult lwf_loss(const ParamVector& params, const ModelConfig& cfg, const Batch& batch,
                    const std::vector<int>& labels, const StrategyState& state, double temperature,
                    double r) {
    require_kind(state, StrategyKind::Lwf, "lwf_loss");
    ForwardTrace tr = forward(params, cfg, batch);
    LossResult res;
    res.data_loss = loss_ce(tr.logits, labels);
    if (!state.teacher || r == 0.0) {
        res.total = res.data_loss;
        res.grad = backward(tr, params, cfg, labels);
        return res;
    }
    if (state.teacher->values.size() != params.values.size())
        throw StateError("teacher does not match student parameter layout");

    Eigen::MatrixXd teacher_logits = forward(*state.teacher, cfg, batch).logits;
    Eigen::MatrixXd soft_teacher = softened_probs(teacher_logits, temperature);
    const double t2 = temperature * temperature;
    res.penalty = r * t2 * soft_cross_entropy(soft_teacher, tr.logits, temperature);
    res.total = res.data_loss + res.penalty;

    Eigen::MatrixXd dlogits =
        loss_ce_grad(tr.logits, labels) +
        r * t2 * soft_cross_entropy_grad(soft_teacher, tr.logits, temperature);
    res.grad = backward_from_logit_grad(tr, params, cfg, dlogits);
    return res;
}

LossResult total_loss(StrategyKind kind, const StrategyHyper& hyper, const ParamVector& params,
                      const ModelConfig& cfg, const Batch& batch, const std::vector<int>& labels,
                      const StrategyState& state) {
    if (state.kind != kind) throw UsageError("total_loss kind does not match state kind");
    if (kind == StrategyKind::Lwf)
        return lwf_loss(params, cfg, batch, labels, state, hyper.t_lwf, hyper.r_lwf);

    ForwardTrace tr = forward(params, cfg, batch);
    LossResult res;
    res.data_loss = loss_ce(tr.logits, labels);

    Penalty pen;
    bool has_penalty = false;
    switch (kind) {
        case StrategyKind::Ewc:
            has_penalty = hyper.lambda_ewc != 0.0 && !state.anchors.empty();
            if (has_penalty) pen = penalty_ewc(params, state, hyper.lambda_ewc);
            break;
        case StrategyKind::OnlineEwc:
            has_penalty = hyper.lambda_ewc != 0.0 && !state.anchors.empty();
            if (has_penalty) pen = penalty_online_ewc(params, state, hyper.lambda_ewc);
            break;
        case StrategyKind::Si:
            has_penalty = hyper.c_si != 0.0 && state.si_anchor.has_value();
            if (has_penalty) pen = penalty_si(params, state, hyper.c_si);
            break;
        default:
            break;
    }

    res.penalty = pen.value;
    res.total = res.data_loss + pen.value;
    res.grad = backward(tr, params, cfg, labels, has_penalty ? &pen.grad : nullptr);
    return res;
}

// ---------------------------------------------------------------------------
// Checkpoint format: "FCST" | u32 version | u8 kind | u64 param_len |
// u64 completed | u64 n_pairs {anchor, fisher} | u8 flags for SI/LwF blocks.
// ---------------------------------------------------------------------------

namespace {

constexpr char kStateMagic[4] = {'F', 'C', 'S', 'T'};
constexpr std::uint32_t kStateVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw StateError("truncated strategy checkpoint");
    return v;
}

void write_doubles(std::ostream& os, const std::vector<double>& v) {
    write_pod<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& is, std::size_t expect) {
    const auto n = read_pod<std::uint64_t>(is);
    if (expect != 0 && n != expect) throw StateError("checkpoint vector length mismatch");
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw StateError("truncated strategy checkpoint");
    return v;
}

}  // namespace

void save_state(const StrategyState& state, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(kStateMagic, 4);
    write_pod(os, kStateVersion);
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(state.kind));
    const std::uint64_t plen =
        state.anchors.empty()
            ? (state.si_anchor ? state.si_anchor->values.size()
                               : (state.teacher ? state.teacher->values.size()
                                                : state.si_importance.size()))
            : state.anchors[0].values.size();
    write_pod<std::uint64_t>(os, plen);
    write_pod<std::uint64_t>(os, state.completed_tasks);

    write_pod<std::uint64_t>(os, state.anchors.size());
    for (std::size_t i = 0; i < state.anchors.size(); ++i) {
        write_doubles(os, state.anchors[i].values);
        write_doubles(os, state.fishers[i].values);
    }

    write_pod<std::uint8_t>(os, state.si_anchor ? 1 : 0);
    if (state.si_anchor) {
        write_doubles(os, state.si_anchor->values);
        write_doubles(os, state.si_importance);
        write_doubles(os, state.si_omega);
        write_doubles(os, state.si_task_start ? state.si_task_start->values
                                              : std::vector<double>{});
    } else if (state.kind == StrategyKind::Si) {
        write_doubles(os, state.si_importance);
        write_doubles(os, state.si_omega);
    }

    write_pod<std::uint8_t>(os, state.teacher ? 1 : 0);
    if (state.teacher) write_doubles(os, state.teacher->values);
    if (!os) throw IoError("write failed: " + path);
}

StrategyState load_state(const std::string& path, const ModelConfig& cfg) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kStateMagic, 4) != 0)
        throw StateError("not a strategy checkpoint: " + path);
    if (read_pod<std::uint32_t>(is) != kStateVersion)
        throw StateError("unsupported checkpoint version in " + path);

    auto map = build_segment_map(cfg);
    StrategyState s;
    s.kind = static_cast<StrategyKind>(read_pod<std::uint8_t>(is));
    const auto plen = read_pod<std::uint64_t>(is);
    if (plen != 0 && plen != map->total())
        throw StateError("checkpoint parameter length does not match config");
    s.completed_tasks = read_pod<std::uint64_t>(is);

    const auto n_pairs = read_pod<std::uint64_t>(is);
    for (std::uint64_t i = 0; i < n_pairs; ++i) {
        ParamVector a(map);
        a.values = read_doubles(is, map->total());
        FisherDiag f;
        f.values = read_doubles(is, map->total());
        for (double v : f.values)
            if (v < 0.0) throw StateError("negative fisher element in checkpoint");
        s.anchors.push_back(std::move(a));
        s.fishers.push_back(std::move(f));
    }

    if (read_pod<std::uint8_t>(is)) {
        ParamVector a(map);
        a.values = read_doubles(is, map->total());
        s.si_anchor = std::move(a);
        s.si_importance = read_doubles(is, map->total());
        s.si_omega = read_doubles(is, map->total());
        auto start = read_doubles(is, 0);
        if (!start.empty()) {
            ParamVector st(map);
            st.values = std::move(start);
            s.si_task_start = std::move(st);
        }
    } else if (s.kind == StrategyKind::Si) {
        s.si_importance = read_doubles(is, 0);
        s.si_omega = read_doubles(is, 0);
    }

    if (read_pod<std::uint8_t>(is)) {
        ParamVector t(map);
        t.values = read_doubles(is, map->total());
        s.teacher = std::move(t);
    }
    return s;
}

}  // namespace forgecl
