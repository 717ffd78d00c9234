#pragma once

#include <string>
#include <vector>

#include "propneat/bench.hpp"
#include "propneat/data.hpp"
#include "propneat/genome.hpp"

namespace propneat {

enum class TrainerKind { propneat, naive, genetic };

const char* to_string(TrainerKind kind);
TrainerKind trainer_from_string(const std::string& s);

struct Species {
    int id = 0;
    Genome representative;
    std::vector<int> members; // genome indices in the current population
};

struct Population {
    int generation = 0;
    std::vector<Genome> genomes;
    std::vector<Species> species;
    InnovationTracker innovations;
    Rng rng;

    Population() : rng(0) {}
};

struct GenomeReport {
    double fitness = 0.5;
    bool untrainable = false;
    double final_train_loss = 0.0;
    std::vector<double> loss_curve;
    ComplexityReport complexity;
    double wall_seconds = 0.0;      // excluded from deterministic persistence
    double epoch_seconds = 0.0;     // training time / epochs, 0 for genetic
};

struct GenerationReport {
    int generation = 0;
    std::vector<GenomeReport> genomes;
    int best_index = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
    int species_count = 0;
    double wall_seconds = 0.0;
};

struct EvolutionHistory {
    std::vector<GenerationReport> reports;
    Genome best;
    double best_fitness = 0.0;
    int best_generation = 0;
};

// Minimal genomes: every input connected to the single output with weights
// drawn from the configured normal; identical gene ids across the population.
Population initial_population(const EvolutionConfig& cfg, int n_inputs);

// Crossover + mutation producing the next population: one elite per species
// survives unchanged, the weakest elimination-fraction of each species is
// barred from breeding, and offspring are allocated to species by mean
// fitness. Weight mutations run only under the genetic trainer.
struct Offspring {
    std::vector<Genome> genomes;
    std::vector<bool> needs_training; // false only for carried elites
};
Offspring reproduce_population(Population& pop, const EvolutionConfig& cfg, TrainerKind trainer);

// One generational cycle: reproduce (except for the very first call), train
// every new or changed genome with the selected trainer, evaluate fitness as
// validation AUC, speciate. Per-genome training runs on `jobs` threads with
// deterministic merging.
GenerationReport run_generation(Population& pop, const PreparedDataset& data,
                                const EvolutionConfig& cfg, TrainerKind trainer, int jobs = 1);

// Full run; the best genome is the highest validation fitness seen in any
// generation, ties resolved toward the earliest. Deterministic given the seed.
EvolutionHistory run_evolution(const EvolutionConfig& cfg, const PreparedDataset& data,
                               TrainerKind trainer, int jobs = 1);

// Iteration i runs with seed + i on the shared data split.
std::vector<EvolutionHistory> run_iterations(const EvolutionConfig& cfg,
                                             const PreparedDataset& data, TrainerKind trainer,
                                             int iterations, int jobs = 1);

// Scores for a genome on a feature batch (compiled fast path; constant 0.5
// on untrainable genomes).
std::vector<double> predict(const Genome& g, const Matrix& x);

} // namespace propneat
