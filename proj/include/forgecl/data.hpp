#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forgecl/model.hpp"

namespace forgecl {

// Labeled windowed time-series samples for one task. inputs is row-major
// [N][T][C]; labels are 0 = normal, 1 = anomalous.
struct TaskDataset {
    std::string task_id;
    int n = 0, steps = 0, channels = 0;
    std::vector<double> inputs;
    std::vector<std::uint8_t> labels;
    std::map<std::string, std::string> meta;

    const double* sample(int i) const {
        return inputs.data() + static_cast<std::size_t>(i) * steps * channels;
    }
    void validate() const;
};

// Nominal press cycle: periodic trapezoid (ramp-up, hold, ramp-down, idle).
struct ProductParams {
    double cycle_period = 120.0;   // timesteps
    double ramp_frac = 0.2;        // fraction of the period spent ramping (each side)
    double hold_frac = 0.35;       // fraction of the period at hold pressure
    double hold_pressure = 8.0;    // plateau level of the summed pressure
    double base_pressure = 2.0;    // idle level of the summed pressure
    double phase = 0.0;            // cycle position at the window start, in timesteps
};

enum class AnomalyOnset { Ramp, Step };

struct PressGenConfig {
    int n_pumps = 8;
    int window_len = 375;
    int samples_per_class = 400;
    double noise_std = 0.35;
    double degradation_min = 0.3;
    double degradation_max = 0.7;
    AnomalyOnset onset = AnomalyOnset::Ramp;
    std::optional<ProductParams> product;  // drawn from the task seed when absent

    void validate() const;
};

ProductParams draw_product_params(int window_len, std::uint64_t seed);

// One product's dataset. Normal samples: each pump carries 1/n_pumps of the
// nominal cycle plus noise. Anomalous: one pump degrades while the others
// compensate so the channel sum still tracks the nominal cycle.
TaskDataset generate_press_task(const PressGenConfig& cfg, std::uint64_t task_seed);

std::vector<TaskDataset> generate_press_catalog(int n_products, const PressGenConfig& cfg,
                                                std::uint64_t seed);

double nominal_cycle(const ProductParams& p, double t);

struct PermutedBenchConfig {
    int n_tasks = 5;
    int image_side = 16;
    int n_classes = 2;
    int channels = 8;  // engine view: T = side^2 / channels
    int samples_per_class = 200;
    double noise_std = 1.0;
    std::uint64_t seed = 0;
    std::string idx_images_path;  // empty -> synthetic class-prototype fallback
    std::string idx_labels_path;

    void validate() const;
};

// Bijective pixel permutation for task t; t = 0 is the identity.
std::vector<int> make_permutation(int n, std::uint64_t seed, int task_index);

std::vector<TaskDataset> generate_permuted_tasks(const PermutedBenchConfig& cfg);

// idx (big-endian) readers; DataError messages carry the failing byte offset.
std::pair<std::vector<double>, std::vector<int>> read_idx_pair(const std::string& images_path,
                                                               const std::string& labels_path);

// Binary container: magic "FCLD", version, task id, (N,T,C), f64 inputs,
// u8 labels, meta table, CRC32 trailer.
void save_dataset(const TaskDataset& ds, const std::string& path);
TaskDataset load_dataset(const std::string& path);

// Deterministic stratified split; returns (train indices, heldout indices).
std::pair<std::vector<int>, std::vector<int>> stratified_split(const TaskDataset& ds,
                                                               double train_frac,
                                                               std::uint64_t seed);

}  // namespace forgecl
