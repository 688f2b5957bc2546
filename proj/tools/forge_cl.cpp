#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "forgecl/errors.hpp"
#include "forgecl/experiments.hpp"
#include "forgecl/gradcheck.hpp"
#include "forgecl/report.hpp"
#include "forgecl/rng.hpp"
#include "forgecl/runconfig.hpp"

namespace fs = std::filesystem;
using namespace forgecl;

namespace {

struct CliOpts {
    std::string config_path;
    std::string out_dir;
    std::string strategy;
    std::string scale = "paper";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int seq_len = 0;
    int sequences = 0;
    bool corrupt = false;  // gradcheck negative-control hook
};

RunConfig build_config(const CliOpts& o) {
    RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
    apply_scale(cfg, o.scale);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.seed_set) cfg.seed = o.seed;
    if (o.seq_len > 0) cfg.seq_len = o.seq_len;
    if (o.sequences > 0) cfg.sequences = o.sequences;
    if (!o.strategy.empty()) {
        auto k = parse_strategy(o.strategy);
        if (!k) throw ConfigError("unknown strategy '" + o.strategy + "'");
        cfg.strategies = {*k};
    }
    cfg.validate();
    return cfg;
}

std::vector<TaskDataset> build_catalog(const RunConfig& cfg) {
    if (cfg.generator == "permuted") {
        PermutedBenchConfig pc = cfg.permuted;
        pc.seed = cfg.seed;
        return generate_permuted_tasks(pc);
    }
    return generate_press_catalog(cfg.n_products, cfg.press, cfg.seed);
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory '" + dir + "'");
}

std::uint64_t meta_digest(const TaskDataset& ds) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& [k, v] : ds.meta)
        for (unsigned char c : k + "=" + v + ";") {
            h ^= c;
            h *= 1099511628211ull;
        }
    return h;
}

int cmd_gen_data(const CliOpts& o) {
    RunConfig cfg = build_config(o);
    ensure_out_dir(cfg.out_dir);
    std::vector<TaskDataset> catalog = build_catalog(cfg);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const TaskDataset& ds = catalog[i];
        char name[32];
        std::snprintf(name, sizeof(name), "task_%02zu.fcld", i);
        save_dataset(ds, cfg.out_dir + "/" + name);
        int pos = 0;
        for (std::uint8_t y : ds.labels) pos += y;
        std::printf("%s  id=%s  N=%d  anomalous=%d/%d  params=%016llx\n", name,
                    ds.task_id.c_str(), ds.n, pos, ds.n,
                    static_cast<unsigned long long>(meta_digest(ds)));
    }
    std::printf("wrote %zu dataset files to %s\n", catalog.size(), cfg.out_dir.c_str());
    return 0;
}

int cmd_run(const CliOpts& o) {
    RunConfig cfg = build_config(o);
    ensure_out_dir(cfg.out_dir);
    std::vector<TaskDataset> catalog = build_catalog(cfg);

    SequenceSpec seq = draw_sequence(static_cast<int>(catalog.size()), cfg.seq_len,
                                     derive_seed(cfg.seed, 0xca0));
    std::vector<const TaskDataset*> tasks;
    for (int idx : seq.task_indices) tasks.push_back(&catalog[static_cast<std::size_t>(idx)]);

    const StrategyKind kind = cfg.strategies.front();
    EvalMatrix m = run_sequence(kind, cfg.hyper, cfg.model, cfg.train, tasks, cfg.seed);

    const std::string base = cfg.out_dir + "/run_" + strategy_name(kind);
    write_eval_matrix_csv(m, base + ".csv");
    write_sidecar(base + ".json", config_digest(cfg), cfg.seed);
    std::printf("strategy %s, %d tasks\n", strategy_name(kind), m.tasks);
    for (int i = 0; i < m.tasks; ++i) {
        for (int j = 0; j < m.tasks; ++j) std::printf(" %.3f", m.at(i, j));
        std::printf("\n");
    }
    std::printf("wrote %s.csv\n", base.c_str());
    return 0;
}

int cmd_campaign(const CliOpts& o) {
    RunConfig cfg = build_config(o);
    ensure_out_dir(cfg.out_dir);
    std::vector<TaskDataset> catalog = build_catalog(cfg);

    CampaignResult res = run_campaign(cfg.strategies, cfg.hyper, cfg.model, cfg.train, catalog,
                                      cfg.sequences, cfg.seq_len, cfg.seed);

    for (const auto& [kind, ms] : res.matrices)
        for (std::size_t s = 0; s < ms.size(); ++s) {
            char name[64];
            std::snprintf(name, sizeof(name), "/matrix_%s_seq%02zu.csv", strategy_name(kind), s);
            write_eval_matrix_csv(ms[s], cfg.out_dir + name);
        }
    write_summary_csv(res.summary, cfg.out_dir + "/summary.csv");
    write_curves_csv(res.summary, cfg.out_dir + "/curves.csv");
    write_task_curves_csv(res, cfg.out_dir + "/task_curves.csv");
    write_sidecar(cfg.out_dir + "/campaign.json", config_digest(cfg), cfg.seed);
    const int panels = write_campaign_svgs(res, cfg.out_dir);

    std::printf("strategy    best   mean   worst\n");
    for (const auto& st : res.summary.strategies)
        std::printf("%-10s  %.3f  %.3f  %.3f\n", strategy_name(st.kind), st.best, st.mean,
                    st.worst);
    std::printf("wrote summary, curves and %d SVG panels to %s\n", panels, cfg.out_dir.c_str());
    return 0;
}

int cmd_gradcheck(const CliOpts& o) {
    // Small dedicated config: well under 2000 parameters.
    ModelConfig cfg;
    cfg.seq_len = 5;
    cfg.channels = 3;
    cfg.input_dim = 15;
    cfg.hidden_layers = 1;
    cfg.hidden_size = 10;
    cfg.batch_size = 4;
    cfg.validate();

    const std::uint64_t seed = o.seed_set ? o.seed : 7;
    Rng rng = make_rng(derive_seed(seed, 0xfd));
    std::normal_distribution<double> nd(0.0, 0.5);
    const int B = 4;
    std::vector<double> data(static_cast<std::size_t>(B) * cfg.seq_len * cfg.channels);
    for (double& v : data) v = nd(rng);
    Batch batch = make_batch(data.data(), B, cfg.seq_len, cfg.channels);
    std::vector<int> labels{0, 1, 1, 0};

    ParamVector p = init_params(cfg, derive_seed(seed, 0x11));
    const double corrupt = o.corrupt ? 0.05 : 0.0;

    double err_data;
    {
        ForwardTrace tr = forward(p, cfg, batch);
        Gradient g = backward(tr, p, cfg, labels, nullptr);
        if (corrupt > 0) g.values[0] += corrupt;
        err_data = fd_max_rel_error(
            [&](const ParamVector& q) {
                return loss_ce(forward(q, cfg, batch).logits, labels);
            },
            p, g, 1e-5);
    }

    // Strategy states with random anchors and importances.
    StrategyState ewc = make_state(StrategyKind::Ewc);
    for (int t = 0; t < 2; ++t) {
        ParamVector a = p;
        for (auto& v : a.values) v += nd(rng);
        FisherDiag f;
        for (std::size_t i = 0; i < p.size(); ++i) f.values.push_back(std::abs(nd(rng)));
        consolidate_ewc(ewc, a, std::move(f));
    }
    StrategyState oewc = make_state(StrategyKind::OnlineEwc);
    oewc.anchors.push_back(ewc.anchors[0]);
    oewc.fishers.push_back(ewc.fishers[0]);
    StrategyState si = make_state(StrategyKind::Si);
    si.si_anchor = ewc.anchors[1];
    for (std::size_t i = 0; i < p.size(); ++i) si.si_importance.push_back(std::abs(nd(rng)));
    StrategyState lwf = make_state(StrategyKind::Lwf);
    lwf_snapshot_teacher(lwf, ewc.anchors[0]);

    auto fd_penalty = [&](auto fn, const Gradient& analytic) {
        Gradient g = analytic;
        if (corrupt > 0) g.values[0] += corrupt;
        return fd_max_rel_error(fn, p, g, 1e-5);
    };

    Penalty pe = penalty_ewc(p, ewc, 7.0);
    const double err_ewc = fd_penalty(
        [&](const ParamVector& q) { return penalty_ewc(q, ewc, 7.0).value; }, pe.grad);
    Penalty po = penalty_online_ewc(p, oewc, 7.0);
    const double err_oewc = fd_penalty(
        [&](const ParamVector& q) { return penalty_online_ewc(q, oewc, 7.0).value; }, po.grad);
    Penalty ps = penalty_si(p, si, 11.0);
    const double err_si = fd_penalty(
        [&](const ParamVector& q) { return penalty_si(q, si, 11.0).value; }, ps.grad);
    LossResult lr = lwf_loss(p, cfg, batch, labels, lwf, 2.0, 1.0);
    const double err_lwf = fd_penalty(
        [&](const ParamVector& q) { return lwf_loss(q, cfg, batch, labels, lwf, 2.0, 1.0).total; },
        lr.grad);

    std::printf("data-loss   max rel error %.3e  (threshold 1e-4)\n", err_data);
    std::printf("ewc         max rel error %.3e  (threshold 1e-8)\n", err_ewc);
    std::printf("online-ewc  max rel error %.3e  (threshold 1e-8)\n", err_oewc);
    std::printf("si          max rel error %.3e  (threshold 1e-8)\n", err_si);
    std::printf("lwf         max rel error %.3e  (threshold 1e-8)\n", err_lwf);

    const bool ok = err_data < 1e-4 && err_ewc < 1e-8 && err_oewc < 1e-8 && err_si < 1e-8 &&
                    err_lwf < 1e-8;
    if (!ok) {
        std::fprintf(stderr, "gradient verification failed\n");
        return 5;
    }
    std::printf("all gradient checks passed\n");
    return 0;
}

int cmd_report(const CliOpts& o) {
    const std::string dir = o.out_dir.empty() ? "out" : o.out_dir;
    const int panels = rebuild_svgs_from_csv(dir);
    std::printf("rebuilt %d SVG panels in %s\n", panels, dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continual-learning benchmark for press anomaly detection"};
    app.require_subcommand(1);

    CliOpts o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "config file path");
        sub->add_option("--out", o.out_dir, "output directory");
        sub->add_option("--seed", o.seed, "master seed")->each([&](const std::string&) {
            o.seed_set = true;
        });
        sub->add_option("--strategy", o.strategy, "none|ewc|online-ewc|si|lwf");
        sub->add_option("--seq-len", o.seq_len, "tasks per sequence");
        sub->add_option("--sequences", o.sequences, "sequences per campaign");
        sub->add_option("--scale", o.scale, "paper|desk")
            ->check(CLI::IsMember({"paper", "desk"}));
    };

    CLI::App* gen = app.add_subcommand("gen-data", "generate a dataset catalog");
    CLI::App* run = app.add_subcommand("run", "run one task sequence");
    CLI::App* camp = app.add_subcommand("campaign", "run a full campaign");
    CLI::App* grad = app.add_subcommand("gradcheck", "verify analytic gradients");
    CLI::App* rep = app.add_subcommand("report", "rebuild SVG plots from CSVs");
    for (CLI::App* sub : {gen, run, camp, grad, rep}) add_common(sub);
    grad->add_flag("--corrupt", o.corrupt,
                   "perturb the analytic gradient (negative-control test hook)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(o);
        if (run->parsed()) return cmd_run(o);
        if (camp->parsed()) return cmd_campaign(o);
        if (grad->parsed()) return cmd_gradcheck(o);
        return cmd_report(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "training diverged: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
