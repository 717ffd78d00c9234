#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "propneat/data.hpp"
#include "propneat/evolution.hpp"

namespace propneat {

// Everything persisted for one evolution run. Deterministic files (config,
// generation records, best genome, predictions, summary) are byte-identical
// across reruns with the same config and seed; wall-clock timings go to a
// separate timings.csv outside the determinism contract.
struct RunPayload {
    std::map<std::string, std::string> config; // persisted verbatim, sorted
    EvolutionHistory history;
    std::vector<double> test_scores;
    std::vector<double> test_labels;
    double test_auc = 0.0;
    std::string trainer;
    std::uint64_t seed = 0;
};

// Run directories are append-only: writing into an existing non-empty
// directory is refused.
void write_run_directory(const std::filesystem::path& dir, const RunPayload& payload);

std::map<std::string, std::string> read_config(const std::filesystem::path& path);

// The deterministic files of a run directory, in fixed order.
std::vector<std::string> deterministic_run_files();

} // namespace propneat
