#include "forgecl/runconfig.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "forgecl/errors.hpp"

namespace forgecl {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void bad(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) bad(line, "trailing characters in number '" + v + "'");
        return d;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad(line, "expected a number, got '" + v + "'");
    }
}

int to_int(const std::string& v, int line) {
    double d = to_double(v, line);
    int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) bad(line, "expected an integer, got '" + v + "'");
    return i;
}

std::uint64_t to_u64(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        std::uint64_t u = std::stoull(v, &pos);
        if (pos != v.size()) bad(line, "trailing characters in seed '" + v + "'");
        return u;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad(line, "expected an unsigned integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& v, int line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad(line, "expected a boolean, got '" + v + "'");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    if (generator == "press")
        press.validate();
    else if (generator == "permuted")
        permuted.validate();
    else
        throw ConfigError("data.generator must be 'press' or 'permuted', got '" + generator + "'");
    if (n_products < 1) throw ConfigError("data.n_products must be positive");
    if (sequences < 1) throw ConfigError("campaign.sequences must be positive");
    if (seq_len < 1) throw ConfigError("campaign.seq_len must be positive");
    const int catalog = generator == "press" ? n_products : permuted.n_tasks;
    if (seq_len > catalog)
        throw ConfigError("campaign.seq_len " + std::to_string(seq_len) +
                          " exceeds the catalog size " + std::to_string(catalog));
    if (strategies.empty()) throw ConfigError("campaign.strategies must not be empty");
    if (train.epochs_per_task < 1) throw ConfigError("train.epochs_per_task must be positive");
    if (!(train.learning_rate > 0)) throw ConfigError("train.learning_rate must be positive");
    if (train.batch_size < 1) throw ConfigError("train.batch_size must be positive");
    if (!(train.train_frac > 0.0 && train.train_frac < 1.0))
        throw ConfigError("train.train_frac must lie in (0,1)");
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    bool model_dims_touched = false;

    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const std::size_t hash = s.find('#');
        if (hash != std::string::npos) s.erase(hash);
        s = trim(s);
        if (s.empty()) continue;

        if (s.front() == '[') {
            if (s.back() != ']') bad(line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            static const char* known[] = {"model", "strategy", "train", "data", "campaign", "run"};
            if (std::find(std::begin(known), std::end(known), section) == std::end(known))
                bad(line, "unknown section [" + section + "]");
            continue;
        }

        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) bad(line, "expected 'key = value', got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (key.empty() || val.empty()) bad(line, "empty key or value");
        if (section.empty()) bad(line, "key '" + key + "' appears before any [section]");

        if (section == "model") {
            if (key == "seq_len") { cfg.model.seq_len = to_int(val, line); model_dims_touched = true; }
            else if (key == "channels") { cfg.model.channels = to_int(val, line); model_dims_touched = true; }
            else if (key == "hidden_layers") cfg.model.hidden_layers = to_int(val, line);
            else if (key == "hidden_size") cfg.model.hidden_size = to_int(val, line);
            else if (key == "batch_size") cfg.model.batch_size = to_int(val, line);
            else bad(line, "unknown key 'model." + key + "'");
        } else if (section == "strategy") {
            if (key == "lambda") cfg.hyper.lambda_ewc = to_double(val, line);
            else if (key == "gamma") cfg.hyper.gamma_ewc = to_double(val, line);
            else if (key == "c") cfg.hyper.c_si = to_double(val, line);
            else if (key == "xi") cfg.hyper.xi_si = to_double(val, line);
            else if (key == "temperature") cfg.hyper.t_lwf = to_double(val, line);
            else if (key == "r") cfg.hyper.r_lwf = to_double(val, line);
            else if (key == "fisher_samples") cfg.hyper.fisher_samples = to_int(val, line);
            else if (key == "empirical_fisher") cfg.hyper.empirical_fisher = to_bool(val, line);
            else bad(line, "unknown key 'strategy." + key + "'");
        } else if (section == "train") {
            if (key == "epochs_per_task") cfg.train.epochs_per_task = to_int(val, line);
            else if (key == "batch_size") cfg.train.batch_size = to_int(val, line);
            else if (key == "learning_rate") cfg.train.learning_rate = to_double(val, line);
            else if (key == "eval_every") cfg.train.eval_every = to_int(val, line);
            else if (key == "grad_clip") cfg.train.grad_clip = to_double(val, line);
            else if (key == "train_frac") cfg.train.train_frac = to_double(val, line);
            else if (key == "optimizer") {
                if (val == "adam") cfg.train.optimizer = OptimizerKind::Adam;
                else if (val == "sgd") cfg.train.optimizer = OptimizerKind::Sgd;
                else bad(line, "train.optimizer must be 'adam' or 'sgd'");
            } else bad(line, "unknown key 'train." + key + "'");
        } else if (section == "data") {
            if (key == "generator") cfg.generator = val;
            else if (key == "n_products") cfg.n_products = to_int(val, line);
            else if (key == "n_pumps") cfg.press.n_pumps = to_int(val, line);
            else if (key == "window_len") cfg.press.window_len = to_int(val, line);
            else if (key == "samples_per_class") {
                cfg.press.samples_per_class = to_int(val, line);
                cfg.permuted.samples_per_class = cfg.press.samples_per_class;
            } else if (key == "noise_std") {
                cfg.press.noise_std = to_double(val, line);
                cfg.permuted.noise_std = cfg.press.noise_std;
            } else if (key == "degradation_min") cfg.press.degradation_min = to_double(val, line);
            else if (key == "degradation_max") cfg.press.degradation_max = to_double(val, line);
            else if (key == "onset") {
                if (val == "ramp") cfg.press.onset = AnomalyOnset::Ramp;
                else if (val == "step") cfg.press.onset = AnomalyOnset::Step;
                else bad(line, "data.onset must be 'ramp' or 'step'");
            } else if (key == "n_tasks") cfg.permuted.n_tasks = to_int(val, line);
            else if (key == "image_side") cfg.permuted.image_side = to_int(val, line);
            else if (key == "idx_images") cfg.permuted.idx_images_path = val;
            else if (key == "idx_labels") cfg.permuted.idx_labels_path = val;
            else bad(line, "unknown key 'data." + key + "'");
        } else if (section == "campaign") {
            if (key == "sequences") cfg.sequences = to_int(val, line);
            else if (key == "seq_len") cfg.seq_len = to_int(val, line);
            else if (key == "strategies") {
                cfg.strategies.clear();
                std::istringstream list(val);
                std::string item;
                while (std::getline(list, item, ',')) {
                    item = trim(item);
                    auto k = parse_strategy(item);
                    if (!k) bad(line, "unknown strategy '" + item + "'");
                    cfg.strategies.push_back(*k);
                }
                if (cfg.strategies.empty()) bad(line, "empty strategy list");
            } else bad(line, "unknown key 'campaign." + key + "'");
        } else {  // run
            if (key == "seed") cfg.seed = to_u64(val, line);
            else if (key == "out_dir") cfg.out_dir = val;
            else bad(line, "unknown key 'run." + key + "'");
        }
    }

    if (model_dims_touched || cfg.generator == "press") {
        // The engine consumes flattened windows; keep input_dim consistent.
        if (cfg.generator == "press" && !model_dims_touched) {
            cfg.model.seq_len = cfg.press.window_len;
            cfg.model.channels = cfg.press.n_pumps;
        }
        cfg.model.input_dim = cfg.model.seq_len * cfg.model.channels;
    }
    if (cfg.generator == "permuted" && !model_dims_touched) {
        cfg.model.channels = cfg.permuted.channels;
        cfg.model.seq_len =
            cfg.permuted.image_side * cfg.permuted.image_side / cfg.permuted.channels;
        cfg.model.input_dim = cfg.model.seq_len * cfg.model.channels;
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string canonical_config(const RunConfig& cfg) {
    std::ostringstream o;
    o << "[model]\n";
    o << "seq_len = " << cfg.model.seq_len << "\n";
    o << "channels = " << cfg.model.channels << "\n";
    o << "hidden_layers = " << cfg.model.hidden_layers << "\n";
    o << "hidden_size = " << cfg.model.hidden_size << "\n";
    o << "batch_size = " << cfg.model.batch_size << "\n";
    o << "[strategy]\n";
    o << "lambda = " << fmt(cfg.hyper.lambda_ewc) << "\n";
    o << "gamma = " << fmt(cfg.hyper.gamma_ewc) << "\n";
    o << "c = " << fmt(cfg.hyper.c_si) << "\n";
    o << "xi = " << fmt(cfg.hyper.xi_si) << "\n";
    o << "temperature = " << fmt(cfg.hyper.t_lwf) << "\n";
    o << "r = " << fmt(cfg.hyper.r_lwf) << "\n";
    o << "fisher_samples = " << cfg.hyper.fisher_samples << "\n";
    o << "empirical_fisher = " << (cfg.hyper.empirical_fisher ? "true" : "false") << "\n";
    o << "[train]\n";
    o << "epochs_per_task = " << cfg.train.epochs_per_task << "\n";
    o << "batch_size = " << cfg.train.batch_size << "\n";
    o << "learning_rate = " << fmt(cfg.train.learning_rate) << "\n";
    o << "eval_every = " << cfg.train.eval_every << "\n";
    o << "grad_clip = " << fmt(cfg.train.grad_clip) << "\n";
    o << "train_frac = " << fmt(cfg.train.train_frac) << "\n";
    o << "optimizer = " << (cfg.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd") << "\n";
    o << "[data]\n";
    o << "generator = " << cfg.generator << "\n";
    o << "n_products = " << cfg.n_products << "\n";
    o << "n_pumps = " << cfg.press.n_pumps << "\n";
    o << "window_len = " << cfg.press.window_len << "\n";
    o << "samples_per_class = " << cfg.press.samples_per_class << "\n";
    o << "noise_std = " << fmt(cfg.press.noise_std) << "\n";
    o << "degradation_min = " << fmt(cfg.press.degradation_min) << "\n";
    o << "degradation_max = " << fmt(cfg.press.degradation_max) << "\n";
    o << "onset = " << (cfg.press.onset == AnomalyOnset::Ramp ? "ramp" : "step") << "\n";
    o << "n_tasks = " << cfg.permuted.n_tasks << "\n";
    o << "image_side = " << cfg.permuted.image_side << "\n";
    if (!cfg.permuted.idx_images_path.empty())
        o << "idx_images = " << cfg.permuted.idx_images_path << "\n";
    if (!cfg.permuted.idx_labels_path.empty())
        o << "idx_labels = " << cfg.permuted.idx_labels_path << "\n";
    o << "[campaign]\n";
    o << "sequences = " << cfg.sequences << "\n";
    o << "seq_len = " << cfg.seq_len << "\n";
    o << "strategies = ";
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i)
        o << (i ? "," : "") << strategy_name(cfg.strategies[i]);
    o << "\n";
    o << "[run]\n";
    o << "seed = " << cfg.seed << "\n";
    o << "out_dir = " << cfg.out_dir << "\n";
    return o.str();
}

std::uint64_t config_digest(const RunConfig& cfg) {
    const std::string s = canonical_config(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void apply_scale(RunConfig& cfg, const std::string& scale) {
    if (scale == "paper") return;
    if (scale != "desk")
        throw ConfigError("scale must be 'paper' or 'desk', got '" + scale + "'");
    cfg.model.seq_len = 64;
    cfg.model.channels = 8;
    cfg.model.hidden_layers = 2;
    cfg.model.hidden_size = 64;
    cfg.model.batch_size = 32;
    cfg.model.input_dim = cfg.model.seq_len * cfg.model.channels;
    cfg.press.window_len = 64;
    cfg.press.n_pumps = 8;
    cfg.press.samples_per_class = 100;
    cfg.press.noise_std = 0.12;
    cfg.press.degradation_min = 0.1;
    cfg.press.degradation_max = 0.5;
    // Table-1 lambda rescaled for the desk-sized model (documented in README)
    cfg.hyper.lambda_ewc = 3e5;
    cfg.train.batch_size = 32;
    cfg.train.learning_rate = 0.003;
    cfg.train.epochs_per_task = 25;
    cfg.train.grad_clip = 1.0;
    cfg.hyper.fisher_samples = 256;
    cfg.permuted.image_side = 16;
    cfg.permuted.samples_per_class = 100;
}

}  // namespace forgecl
