#pragma once

#include <string>

#include "forgecl/experiments.hpp"

namespace forgecl {

// Schema tag emitted as a comment line at the top of every CSV.
inline constexpr const char* kCsvSchema = "forge-cl.csv.v1";

// phase,task,accuracy — S^2 rows.
void write_eval_matrix_csv(const EvalMatrix& m, const std::string& path);

// strategy,best,mean,worst — one row per strategy.
void write_summary_csv(const CampaignSummary& s, const std::string& path);

// strategy,phase,mean_accuracy — the Fig. 4 mean-comparison curves.
void write_curves_csv(const CampaignSummary& s, const std::string& path);

// strategy,phase,task,accuracy — per-task curves averaged over sequences.
void write_task_curves_csv(const CampaignResult& r, const std::string& path);

// Small JSON sidecar: config digest, seed, schema version.
void write_sidecar(const std::string& path, std::uint64_t config_digest, std::uint64_t seed);

// One SVG per strategy (per-task accuracy vs phase) plus one mean-comparison
// SVG; returns the number of files written (n_strategies + 1).
int write_campaign_svgs(const CampaignResult& r, const std::string& dir);

// Rebuilds the SVG panels from previously written CSV files in `dir`
// (the `report` subcommand); returns the number of files written.
int rebuild_svgs_from_csv(const std::string& dir);

}  // namespace forgecl
