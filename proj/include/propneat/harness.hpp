#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "propneat/bench.hpp"
#include "propneat/data.hpp"
#include "propneat/evolution.hpp"
#include "propneat/genome.hpp"

namespace propneat {

// Synthetic genome with `total_layers` layers (input and output included) and
// exactly `param_target` parameters (nodes + connections) when feasible: a
// layered chain filled with adjacent-layer connections only, every node on an
// input-to-output path. Used to vary depth at fixed parameter count.
Genome make_family_genome(int total_layers, int param_target, int n_inputs, Rng& rng,
                          int width_override = 0);

struct TimingPoint {
    int depth = 0;
    int size = 0;
    int width = 0;
    double median_epoch_seconds = 0.0;
    std::vector<double> epoch_seconds; // pooled across repeats, warm-up excluded
};

struct FamilySpec {
    std::vector<int> depths = {3, 6, 12, 24};
    int param_target = 200;
    int n_inputs = 4;
    int batch = 32;
    int epochs = 12;
    int repeats = 7;
    int warmup_epochs = 2;
    std::uint64_t seed = 1;
};

struct TimingCharacterization {
    std::vector<TimingPoint> points;
    double pearson_depth = 0.0;
    double pearson_size = 0.0;
    double pearson_width = 0.0;
    LinearFit depth_fit;
};

// Median per-epoch training time per family member, measured on the epoch
// loop only with a monotonic clock; warm-up epochs are dropped. Runs are
// serialized on the calling thread to avoid contention skew.
TimingCharacterization characterize_timing(const FamilySpec& spec);

// Plot-data export: four columns (depth, size, width, time_per_epoch).
void write_plot_data(const TimingCharacterization& timing, const std::filesystem::path& path);

struct AblationRow {
    std::string trainer;
    double test_auc = 0.0;
    double wall_seconds = 0.0;
    int generations_run = 0;
};

struct AblationResult {
    std::vector<AblationRow> rows; // propneat, naive, genetic
};

// Matched-budget comparison: the genetic trainer receives
// generations * epochs_per_generation generations.
AblationResult run_ablation(const PreparedDataset& data, const EvolutionConfig& cfg, int jobs = 1);

std::string format_table(const AblationResult& result);

} // namespace propneat
