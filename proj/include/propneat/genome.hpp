#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "propneat/rng.hpp"

namespace propneat {

enum class NodeKind { input, hidden, output };

const char* to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& s);

// Gene ids are innovation numbers: a single counter shared by node and
// connection genes, strictly increasing over a run.
struct NodeGene {
    int id = 0;
    NodeKind kind = NodeKind::hidden;
    double bias = 0.0;
};

struct ConnectionGene {
    int id = 0;
    int from = 0;
    int to = 0;
    double weight = 0.0;
    bool enabled = true;
};

struct Genome {
    std::vector<NodeGene> nodes;             // ascending id
    std::vector<ConnectionGene> connections; // ascending id
    std::optional<double> fitness;
    std::optional<int> species_id;

    const NodeGene* find_node(int id) const;
    NodeGene* find_node(int id);
    const ConnectionGene* find_connection(int from, int to) const;
    ConnectionGene* find_connection(int from, int to);
    const ConnectionGene* find_connection_by_id(int id) const;

    std::vector<int> input_ids() const;  // ascending
    std::vector<int> output_ids() const; // ascending
    int max_gene_id() const;
};

// Throws std::invalid_argument describing the first violated invariant.
void validate(const Genome& g);

// True if adding an enabled edge from->to would close a directed cycle.
bool creates_cycle(const Genome& g, int from, int to);
bool is_acyclic(const Genome& g);

struct WeightInit {
    double mean = 0.0;
    double stddev = 1.0;
};

struct SpeciationCoefficients {
    double excess = 1.0;   // c1
    double disjoint = 1.0; // c2
    double weight = 0.4;   // c3
};

struct EvolutionConfig {
    int population_size = 500;
    int generations = 500;
    int epochs_per_generation = 25;

    double p_add_connection = 0.6;
    double p_remove_connection = 0.6;
    double p_add_node = 0.5;
    double p_remove_node = 0.5;
    double p_reinit_weights = 0.0;

    double compatibility_threshold = 3.0;
    double elimination_fraction = 0.5;
    WeightInit weight_init;
    SpeciationCoefficients speciation;
    int batch_size = 16; // mini-batch size for the per-generation trainers; 0 = full batch

    // Weight mutation used only by the genetic trainer.
    double p_perturb_weight = 0.8;
    double perturb_stddev = 0.5;
    double p_replace_weight = 0.1;

    std::uint64_t seed = 0;

    void validate() const; // throws ConfigInvalid
};

// Issues innovation ids. The per-generation cache makes the same structural
// mutation requested twice in one generation reuse the same new ids.
// Shared mutable state: confine to the reproduction thread or lock externally.
class InnovationTracker {
public:
    explicit InnovationTracker(int next_id = 0) : next_(next_id) {}

    struct NodeSplit {
        int node_id;
        int in_connection_id;
        int out_connection_id;
    };

    int connection_id(int from, int to);
    NodeSplit node_split(int split_connection_id);
    void begin_generation();
    int peek_next() const { return next_; }

private:
    int next_;
    std::map<std::pair<int, int>, int> connection_cache_;
    std::map<int, NodeSplit> split_cache_;
};

// Endpoint legality for a prospective connection (kind rules, self-loops,
// duplicates, cycles). Used by the mutation and exposed for tests.
bool connection_is_legal(const Genome& g, int from, int to);

// Genetic operators are pure: they take the parent(s) by value/reference and
// return a new genome with fitness cleared.
Genome mutate_add_connection(const Genome& g, InnovationTracker& innovations,
                             const WeightInit& init, Rng& rng);
Genome mutate_add_node(const Genome& g, InnovationTracker& innovations, Rng& rng);
Genome mutate_remove_connection(const Genome& g, Rng& rng);
Genome mutate_remove_node(const Genome& g, Rng& rng);
Genome mutate_reinit_weights(const Genome& g, const WeightInit& init, Rng& rng);

// Weight mutations for the genetic trainer only.
Genome mutate_perturb_weights(const Genome& g, double p_perturb, double perturb_stddev,
                              double p_replace, const WeightInit& init, Rng& rng);

// Matching genes take their weight from a uniformly chosen parent; disjoint
// and excess genes come from the fitter parent (ties resolved toward a).
// Throws std::invalid_argument when either fitness is unset.
Genome crossover(const Genome& a, const Genome& b, Rng& rng);

double compatibility_distance(const Genome& a, const Genome& b,
                              const SpeciationCoefficients& c);

struct Speciation {
    std::vector<int> assignment;             // species index per genome
    std::vector<Genome> next_representatives; // first genome assigned to each species
};

// Assigns each genome to the first species whose representative is within
// threshold; otherwise it founds a new species. `prev_representatives` come
// from the previous generation; pass empty on the first call.
Speciation speciate(const std::vector<Genome>& population,
                    const std::vector<Genome>& prev_representatives,
                    double threshold, const SpeciationCoefficients& c);

// Line-oriented text serialization, version-tagged, exact round-trip.
std::string to_text(const Genome& g);
Genome genome_from_text(const std::string& text);
void save_genome(const Genome& g, const std::filesystem::path& path);
Genome load_genome(const std::filesystem::path& path);

} // namespace propneat
