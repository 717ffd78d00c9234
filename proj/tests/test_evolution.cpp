#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "helpers.hpp"
#include "propneat/compile.hpp"
#include "propneat/errors.hpp"
#include "propneat/evolution.hpp"

using namespace propneat;

namespace {

EvolutionConfig small_config(std::uint64_t seed = 1) {
    EvolutionConfig cfg;
    cfg.population_size = 12;
    cfg.generations = 3;
    cfg.epochs_per_generation = 4;
    cfg.seed = seed;
    return cfg;
}

PreparedDataset xor_data(std::uint64_t seed = 2) {
    return prepare(make_xor_gaussians(160, seed), seed);
}

// Linearly separable single-feature set.
PreparedDataset separable_data() {
    RawDataset raw;
    raw.columns.resize(2);
    raw.columns[0] = {"x", ColumnKind::continuous, {}, {}};
    raw.columns[1] = {"y", ColumnKind::target, {}, {}};
    raw.target_index = 1;
    Rng rng(5);
    for (int i = 0; i < 120; ++i) {
        const int label = i % 2;
        raw.columns[0].numeric.push_back(label ? rng.uniform(0.5, 1.5) : rng.uniform(-1.5, -0.5));
        raw.columns[1].numeric.push_back(label);
        ++raw.n_rows;
    }
    return prepare(raw, 5);
}

bool same_topology(const Genome& a, const Genome& b) {
    if (a.nodes.size() != b.nodes.size() || a.connections.size() != b.connections.size())
        return false;
    for (std::size_t i = 0; i < a.connections.size(); ++i) {
        if (a.connections[i].id != b.connections[i].id) return false;
        if (a.connections[i].enabled != b.connections[i].enabled) return false;
    }
    return true;
}

std::string fitness_fingerprint(const EvolutionHistory& h) {
    std::string out = to_text(h.best);
    char buf[64];
    for (const auto& report : h.reports) {
        for (const auto& g : report.genomes) {
            std::snprintf(buf, sizeof buf, "%.17g;", g.fitness);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace

TEST_CASE("initial population is minimal and identically structured") {
    const EvolutionConfig cfg = small_config();
    Population pop = initial_population(cfg, 4);
    REQUIRE(pop.genomes.size() == 12);
    for (const auto& g : pop.genomes) {
        CHECK(g.nodes.size() == 5);
        CHECK(g.connections.size() == 4);
        CHECK_FALSE(g.fitness.has_value());
        CHECK(same_topology(g, pop.genomes.front()));
        CHECK_NOTHROW(validate(g));
    }
    // Weights differ between genomes but gene ids are shared.
    CHECK(pop.genomes[0].connections[0].weight != pop.genomes[1].connections[0].weight);
    CHECK(pop.innovations.peek_next() == 9);
}

TEST_CASE("one generation trains, evaluates, and speciates the population") {
    const EvolutionConfig cfg = small_config();
    const PreparedDataset data = xor_data();
    Population pop = initial_population(cfg, data.feature_dim());
    const GenerationReport report = run_generation(pop, data, cfg, TrainerKind::propneat);

    CHECK(report.generation == 1);
    CHECK(pop.genomes.size() == 12);
    REQUIRE(report.genomes.size() == 12);
    double best = -1.0;
    for (const auto& g : report.genomes) best = std::max(best, g.fitness);
    CHECK(report.best_fitness == best);
    CHECK(report.species_count >= 1);

    // Species membership is exhaustive and disjoint.
    std::set<int> seen;
    for (const auto& s : pop.species)
        for (int m : s.members) CHECK(seen.insert(m).second);
    CHECK(seen.size() == 12);
    for (const auto& g : pop.genomes) CHECK(g.fitness.has_value());
}

TEST_CASE("population size stays constant across generations") {
    const EvolutionConfig cfg = small_config();
    const PreparedDataset data = xor_data();
    Population pop = initial_population(cfg, data.feature_dim());
    for (int g = 0; g < 4; ++g) {
        run_generation(pop, data, cfg, TrainerKind::propneat);
        CHECK(pop.genomes.size() == static_cast<std::size_t>(cfg.population_size));
    }
}

TEST_CASE("zero mutation probabilities keep offspring topologically identical") {
    EvolutionConfig cfg = small_config();
    cfg.p_add_connection = cfg.p_remove_connection = 0.0;
    cfg.p_add_node = cfg.p_remove_node = 0.0;
    const PreparedDataset data = separable_data();
    Population pop = initial_population(cfg, data.feature_dim());
    const Genome reference = pop.genomes.front();
    for (int g = 0; g < 3; ++g) run_generation(pop, data, cfg, TrainerKind::propneat);
    for (const auto& g : pop.genomes) CHECK(same_topology(g, reference));
}

TEST_CASE("elitism keeps the best fitness non-decreasing on separable data") {
    EvolutionConfig cfg = small_config();
    cfg.p_add_connection = cfg.p_remove_connection = 0.0;
    cfg.p_add_node = cfg.p_remove_node = 0.0;
    cfg.generations = 5;
    const PreparedDataset data = separable_data();
    const EvolutionHistory history = run_evolution(cfg, data, TrainerKind::propneat);
    for (std::size_t i = 1; i < history.reports.size(); ++i)
        CHECK(history.reports[i].best_fitness >= history.reports[i - 1].best_fitness - 1e-12);
    CHECK(history.best_fitness > 0.9);
}

TEST_CASE("backprop trainers never mutate weights during reproduction") {
    const EvolutionConfig cfg = small_config();
    const PreparedDataset data = xor_data();
    for (const TrainerKind trainer : {TrainerKind::propneat, TrainerKind::naive}) {
        Population pop = initial_population(cfg, data.feature_dim());
        run_generation(pop, data, cfg, trainer);
        std::map<int, std::set<double>> parent_weights; // gene id -> weights in population
        for (const auto& g : pop.genomes)
            for (const auto& c : g.connections) parent_weights[c.id].insert(c.weight);
        const Offspring next = reproduce_population(pop, cfg, trainer);
        for (const auto& child : next.genomes)
            for (const auto& c : child.connections) {
                // An existing gene's weight is always one of the parents'
                // values for that gene id; only freshly created genes
                // (splits, added connections) may carry new weights.
                auto pool = parent_weights.find(c.id);
                if (pool == parent_weights.end()) continue;
                CHECK(pool->second.count(c.weight) == 1);
            }
    }
}

TEST_CASE("the genetic trainer does mutate weights") {
    const EvolutionConfig cfg = small_config();
    const PreparedDataset data = xor_data();
    Population pop = initial_population(cfg, data.feature_dim());
    run_generation(pop, data, cfg, TrainerKind::genetic);
    std::map<int, std::set<double>> parent_weights;
    for (const auto& g : pop.genomes)
        for (const auto& c : g.connections) parent_weights[c.id].insert(c.weight);
    const Offspring next = reproduce_population(pop, cfg, TrainerKind::genetic);
    int moved = 0;
    for (const auto& child : next.genomes)
        for (const auto& c : child.connections) {
            auto pool = parent_weights.find(c.id);
            if (pool != parent_weights.end() && !pool->second.count(c.weight)) ++moved;
        }
    CHECK(moved > 0);
}

TEST_CASE("untrainable genomes receive the 0.5 fitness floor") {
    EvolutionConfig cfg = small_config();
    cfg.p_remove_connection = 1.0; // aggressively disconnect
    cfg.p_add_connection = 0.0;
    cfg.p_add_node = 0.0;
    cfg.generations = 4;
    const PreparedDataset data = separable_data();
    const EvolutionHistory history = run_evolution(cfg, data, TrainerKind::propneat);
    bool saw_untrainable = false;
    for (const auto& report : history.reports)
        for (const auto& g : report.genomes)
            if (g.untrainable) {
                saw_untrainable = true;
                CHECK(g.fitness == 0.5);
            }
    CHECK(saw_untrainable);
}

TEST_CASE("evolution is deterministic and parallelism does not change results") {
    EvolutionConfig cfg = small_config(77);
    cfg.generations = 3;
    const PreparedDataset data = xor_data();
    const EvolutionHistory a = run_evolution(cfg, data, TrainerKind::propneat, 1);
    const EvolutionHistory b = run_evolution(cfg, data, TrainerKind::propneat, 1);
    const EvolutionHistory c = run_evolution(cfg, data, TrainerKind::propneat, 4);
    CHECK(fitness_fingerprint(a) == fitness_fingerprint(b));
    CHECK(fitness_fingerprint(a) == fitness_fingerprint(c));
}

TEST_CASE("iteration i uses seed + i") {
    EvolutionConfig cfg = small_config(100);
    cfg.generations = 2;
    const PreparedDataset data = xor_data();
    const std::vector<EvolutionHistory> runs =
        run_iterations(cfg, data, TrainerKind::propneat, 2);
    EvolutionConfig shifted = cfg;
    shifted.seed = 101;
    const EvolutionHistory expect = run_evolution(shifted, data, TrainerKind::propneat);
    CHECK(fitness_fingerprint(runs[1]) == fitness_fingerprint(expect));
    CHECK(fitness_fingerprint(runs[0]) != fitness_fingerprint(runs[1]));
}

TEST_CASE("generations=0 still trains and evaluates the initial population") {
    EvolutionConfig cfg = small_config();
    cfg.generations = 0;
    const PreparedDataset data = separable_data();
    const EvolutionHistory history = run_evolution(cfg, data, TrainerKind::propneat);
    CHECK(history.reports.size() == 1);
    CHECK(history.best_fitness > 0.0);
    CHECK(history.best.fitness.has_value());
}

TEST_CASE("stored best fitness equals recomputed validation AUC of stored weights") {
    EvolutionConfig cfg = small_config(31);
    const PreparedDataset data = xor_data();
    const EvolutionHistory history = run_evolution(cfg, data, TrainerKind::propneat);
    const auto [x_val, y_val] = data.validation_batch();
    const double recomputed = auc(predict(history.best, x_val), y_val.values());
    CHECK(recomputed == doctest::Approx(history.best_fitness).epsilon(1e-12));
}

TEST_CASE("invalid configs are rejected before any computation") {
    EvolutionConfig cfg = small_config();
    cfg.elimination_fraction = 1.0;
    const PreparedDataset data = separable_data();
    CHECK_THROWS_AS(run_evolution(cfg, data, TrainerKind::propneat), ConfigInvalid);
}
