#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "forgecl/errors.hpp"
#include "forgecl/report.hpp"
#include "forgecl/runconfig.hpp"

using namespace forgecl;

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FORGE_CL_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    REQUIRE(out.good());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int count_data_rows(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    int rows = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) { header_seen = true; continue; }
        ++rows;
    }
    return rows;
}

// small, fast press setup shared by the subprocess tests
const char* kTinyConfig =
    "[model]\n"
    "hidden_layers = 1\n"
    "hidden_size = 8\n"
    "batch_size = 8\n"
    "[train]\n"
    "epochs_per_task = 1\n"
    "batch_size = 8\n"
    "[strategy]\n"
    "fisher_samples = 8\n"
    "[data]\n"
    "generator = press\n"
    "n_products = 6\n"
    "n_pumps = 2\n"
    "window_len = 12\n"
    "samples_per_class = 10\n"
    "[campaign]\n"
    "sequences = 1\n"
    "seq_len = 5\n"
    "strategies = none\n"
    "[run]\n"
    "seed = 7\n";

}  // namespace

TEST_CASE("defaults survive an empty config") {
    RunConfig cfg = parse_config("");
    CHECK(cfg.hyper.lambda_ewc == 1e6);
    CHECK(cfg.hyper.gamma_ewc == 10.0);
    CHECK(cfg.train.batch_size == 100);
    CHECK(cfg.train.learning_rate == 0.001);
    CHECK(cfg.sequences == 20);
    CHECK(cfg.seq_len == 5);
    CHECK(cfg.n_products == 15);
    CHECK(cfg.strategies.size() == 5);
    // press generator keeps the flattened window consistent with the model
    CHECK(cfg.model.seq_len == cfg.press.window_len);
    CHECK(cfg.model.channels == cfg.press.n_pumps);
    CHECK(cfg.model.input_dim == cfg.model.seq_len * cfg.model.channels);
}

TEST_CASE("unknown keys and sections are rejected with the line number") {
    try {
        parse_config("[model]\nhidden_size = 8\nhiden_layers = 2\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("hiden_layers") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[modle]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("seed = 1\n"), ConfigError);          // key before section
    CHECK_THROWS_AS(parse_config("[run]\nseed\n"), ConfigError);       // missing '='
    CHECK_THROWS_AS(parse_config("[train]\nbatch_size = ten\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[campaign]\nstrategies = none,ew\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[campaign]\nseq_len = 99\n"), ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
    RunConfig cfg = parse_config("# header\n\n[run]\nseed = 42  # trailing\n");
    CHECK(cfg.seed == 42);
}

TEST_CASE("config digest changes iff a key changes") {
    RunConfig a = parse_config("");
    RunConfig b = parse_config("");
    CHECK(config_digest(a) == config_digest(b));
    b.hyper.lambda_ewc = 2e6;
    CHECK(config_digest(a) != config_digest(b));
    b.hyper.lambda_ewc = 1e6;
    CHECK(config_digest(a) == config_digest(b));
    b.seed = 2;
    CHECK(config_digest(a) != config_digest(b));
}

TEST_CASE("canonical serialization round-trips") {
    RunConfig cfg = parse_config(kTinyConfig);
    RunConfig again = parse_config(canonical_config(cfg));
    CHECK(canonical_config(again) == canonical_config(cfg));
    CHECK(config_digest(again) == config_digest(cfg));
}

TEST_CASE("desk scale shrinks the model and data dimensions") {
    RunConfig cfg = parse_config("");
    apply_scale(cfg, "desk");
    CHECK(cfg.model.seq_len == 64);
    CHECK(cfg.model.channels == 8);
    CHECK(cfg.model.hidden_size == 64);
    CHECK(cfg.press.window_len == 64);
    CHECK(cfg.model.input_dim == 512);
    apply_scale(cfg, "paper");  // no-op
    CHECK(cfg.model.hidden_size == 64);
    CHECK_THROWS_AS(apply_scale(cfg, "tiny"), ConfigError);
}

TEST_CASE("load_config maps a missing file to IoError") {
    CHECK_THROWS_AS(load_config("/nonexistent/forge.cfg"), IoError);
}

TEST_CASE("CSV writers emit the schema line and the documented shapes") {
    const fs::path dir = fresh_dir("forgecl_csv");

    EvalMatrix m;
    m.tasks = 2;
    m.acc = {0.9, 0.2, 0.6, 0.8};
    CampaignResult res;
    res.matrices[StrategyKind::None] = {m};
    res.matrices[StrategyKind::Ewc] = {m};
    res.summary = compute_summary(res.matrices);

    write_eval_matrix_csv(m, (dir / "m.csv").string());
    write_summary_csv(res.summary, (dir / "s.csv").string());
    write_curves_csv(res.summary, (dir / "c.csv").string());
    write_task_curves_csv(res, (dir / "t.csv").string());

    for (const char* f : {"m.csv", "s.csv", "c.csv", "t.csv"}) {
        const std::string text = read_file(dir / f);
        CHECK(text.find(kCsvSchema) != std::string::npos);
    }
    CHECK(count_data_rows(read_file(dir / "m.csv")) == 4);   // S^2
    CHECK(count_data_rows(read_file(dir / "s.csv")) == 2);   // one per strategy
    CHECK(count_data_rows(read_file(dir / "c.csv")) == 4);   // strategies x phases
    CHECK(count_data_rows(read_file(dir / "t.csv")) == 8);   // strategies x S^2
    CHECK(read_file(dir / "m.csv").find("phase,task,accuracy") != std::string::npos);
    CHECK(read_file(dir / "s.csv").find("strategy,best,mean,worst") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("a five-strategy campaign yields six SVG panels") {
    const fs::path dir = fresh_dir("forgecl_svg");

    EvalMatrix m;
    m.tasks = 2;
    m.acc = {0.9, 0.2, 0.6, 0.8};
    CampaignResult res;
    for (StrategyKind k : {StrategyKind::None, StrategyKind::Ewc, StrategyKind::OnlineEwc,
                           StrategyKind::Si, StrategyKind::Lwf})
        res.matrices[k] = {m};
    res.summary = compute_summary(res.matrices);

    CHECK(write_campaign_svgs(res, dir.string()) == 6);
    int svg_files = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".svg") ++svg_files;
    CHECK(svg_files == 6);

    // report rebuild path: regenerate the panels from the CSVs alone
    write_task_curves_csv(res, (dir / "task_curves.csv").string());
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".svg") fs::remove(e.path());
    CHECK(rebuild_svgs_from_csv(dir.string()) == 6);

    fs::remove_all(dir);
}

TEST_CASE("cli: config errors exit 2, I/O errors exit 3") {
    const fs::path dir = fresh_dir("forgecl_cli_err");
    write_file(dir / "bad.cfg", "[model]\nbogus = 1\n");
    CHECK(run_cli("run --config " + (dir / "bad.cfg").string()) == 2);
    CHECK(run_cli("run --config /nonexistent/forge.cfg") == 3);
    CHECK(run_cli("gen-data --config " + (dir / "bad.cfg").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("cli: gen-data writes one file per product, byte-identical on rerun") {
    const fs::path dir = fresh_dir("forgecl_cli_gen");
    write_file(dir / "tiny.cfg", kTinyConfig);
    const std::string cfg_arg = " --config " + (dir / "tiny.cfg").string();

    CHECK(run_cli("gen-data" + cfg_arg + " --out " + (dir / "a").string()) == 0);
    CHECK(run_cli("gen-data" + cfg_arg + " --out " + (dir / "b").string()) == 0);

    int files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a"))
        if (e.path().extension() == ".fcld") ++files;
    CHECK(files == 6);
    for (const auto& e : fs::directory_iterator(dir / "a")) {
        const fs::path twin = dir / "b" / e.path().filename();
        CHECK(read_file(e.path()) == read_file(twin));
    }
    fs::remove_all(dir);
}

TEST_CASE("cli: run emits the S^2 accuracy grid plus a sidecar") {
    const fs::path dir = fresh_dir("forgecl_cli_run");
    write_file(dir / "tiny.cfg", kTinyConfig);
    const std::string out = (dir / "out").string();
    CHECK(run_cli("run --config " + (dir / "tiny.cfg").string() + " --strategy none --out " +
                  out) == 0);

    const std::string csv = read_file(fs::path(out) / "run_none.csv");
    CHECK(count_data_rows(csv) == 25);
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.find("phase") == 0) continue;
        const double acc = std::stod(line.substr(line.rfind(',') + 1));
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }

    const std::string sidecar = read_file(fs::path(out) / "run_none.json");
    CHECK(sidecar.find("config_digest") != std::string::npos);
    CHECK(sidecar.find("seed") != std::string::npos);

    // same config -> same digest; different seed -> different digest
    CHECK(run_cli("run --config " + (dir / "tiny.cfg").string() +
                  " --strategy none --seed 8 --out " + (dir / "out2").string()) == 0);
    const std::string sidecar2 = read_file(dir / "out2" / "run_none.json");
    CHECK(sidecar != sidecar2);
    fs::remove_all(dir);
}

TEST_CASE("cli: campaign emits matrices, summary, curves and panels") {
    const fs::path dir = fresh_dir("forgecl_cli_camp");
    std::string cfg = kTinyConfig;
    cfg.replace(cfg.find("strategies = none"), 17, "strategies = none,si");
    write_file(dir / "camp.cfg", cfg);
    const std::string out = (dir / "out").string();
    CHECK(run_cli("campaign --config " + (dir / "camp.cfg").string() + " --out " + out) == 0);

    CHECK(fs::exists(fs::path(out) / "matrix_none_seq00.csv"));
    CHECK(fs::exists(fs::path(out) / "matrix_si_seq00.csv"));
    CHECK(count_data_rows(read_file(fs::path(out) / "summary.csv")) == 2);
    CHECK(count_data_rows(read_file(fs::path(out) / "curves.csv")) == 10);
    CHECK(fs::exists(fs::path(out) / "campaign.json"));
    int svg_files = 0;
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().extension() == ".svg") ++svg_files;
    CHECK(svg_files == 3);  // two strategy panels + mean comparison

    // report rebuilds the same panel set from the CSVs
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().extension() == ".svg") fs::remove(e.path());
    CHECK(run_cli("report --out " + out) == 0);
    svg_files = 0;
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().extension() == ".svg") ++svg_files;
    CHECK(svg_files == 3);
    fs::remove_all(dir);
}

TEST_CASE("cli: gradcheck passes clean and fails the corrupted negative control") {
    CHECK(run_cli("gradcheck") == 0);
    CHECK(run_cli("gradcheck --corrupt") == 5);
}
