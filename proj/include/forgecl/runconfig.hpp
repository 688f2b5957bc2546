#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forgecl/data.hpp"
#include "forgecl/experiments.hpp"
#include "forgecl/model.hpp"
#include "forgecl/strategies.hpp"

namespace forgecl {

// Everything a run needs, parsed from a flat sectioned key/value file.
// Unknown sections or keys are rejected so typos cannot silently fall back
// to defaults.
struct RunConfig {
    ModelConfig model;
    StrategyHyper hyper;
    TrainSpec train;

    std::string generator = "press";  // "press" | "permuted"
    int n_products = 15;
    PressGenConfig press;
    PermutedBenchConfig permuted;

    int sequences = 20;
    int seq_len = 5;
    std::vector<StrategyKind> strategies = {StrategyKind::None, StrategyKind::Ewc,
                                            StrategyKind::OnlineEwc, StrategyKind::Si,
                                            StrategyKind::Lwf};

    std::uint64_t seed = 1;
    std::string out_dir = "out";

    void validate() const;
};

// Parses config text; ConfigError messages carry the line number.
RunConfig parse_config(const std::string& text);

// Reads and parses a config file; missing file -> IoError.
RunConfig load_config(const std::string& path);

// Canonical serialization: every key emitted, fixed order, so two configs
// serialize identically iff they are equal.
std::string canonical_config(const RunConfig& cfg);

// FNV-1a over canonical_config; changes iff any config key changes.
std::uint64_t config_digest(const RunConfig& cfg);

// "paper" leaves the Table 1 dimensions; "desk" shrinks model and data to
// laptop scale (T=64, C=8, hidden 64) for CI and quick experiments.
void apply_scale(RunConfig& cfg, const std::string& scale);

}  // namespace forgecl
