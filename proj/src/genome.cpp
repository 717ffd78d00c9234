#include "propneat/genome.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "propneat/errors.hpp"

namespace propneat {

const char* to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::input: return "input";
    case NodeKind::hidden: return "hidden";
    case NodeKind::output: return "output";
    }
    return "hidden";
}

NodeKind node_kind_from_string(const std::string& s) {
    if (s == "input") return NodeKind::input;
    if (s == "hidden") return NodeKind::hidden;
    if (s == "output") return NodeKind::output;
    throw ParseError("unknown node kind: " + s);
}

const NodeGene* Genome::find_node(int id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

NodeGene* Genome::find_node(int id) {
    for (auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

const ConnectionGene* Genome::find_connection(int from, int to) const {
    for (const auto& c : connections)
        if (c.from == from && c.to == to) return &c;
    return nullptr;
}

ConnectionGene* Genome::find_connection(int from, int to) {
    for (auto& c : connections)
        if (c.from == from && c.to == to) return &c;
    return nullptr;
}

const ConnectionGene* Genome::find_connection_by_id(int id) const {
    for (const auto& c : connections)
        if (c.id == id) return &c;
    return nullptr;
}

std::vector<int> Genome::input_ids() const {
    std::vector<int> ids;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::input) ids.push_back(n.id);
    return ids;
}

std::vector<int> Genome::output_ids() const {
    std::vector<int> ids;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::output) ids.push_back(n.id);
    return ids;
}

int Genome::max_gene_id() const {
    int m = -1;
    for (const auto& n : nodes) m = std::max(m, n.id);
    for (const auto& c : connections) m = std::max(m, c.id);
    return m;
}

namespace {

void sort_genes(Genome& g) {
    std::sort(g.nodes.begin(), g.nodes.end(),
              [](const NodeGene& a, const NodeGene& b) { return a.id < b.id; });
    std::sort(g.connections.begin(), g.connections.end(),
              [](const ConnectionGene& a, const ConnectionGene& b) { return a.id < b.id; });
}

// Adjacency over enabled connections, keyed by node id.
std::map<int, std::vector<int>> enabled_adjacency(const Genome& g) {
    std::map<int, std::vector<int>> adj;
    for (const auto& n : g.nodes) adj[n.id];
    for (const auto& c : g.connections)
        if (c.enabled) adj[c.from].push_back(c.to);
    return adj;
}

bool path_exists(const std::map<int, std::vector<int>>& adj, int from, int to) {
    std::vector<int> stack{from};
    std::set<int> seen{from};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (v == to) return true;
        auto it = adj.find(v);
        if (it == adj.end()) continue;
        for (int w : it->second) {
            if (seen.insert(w).second) stack.push_back(w);
        }
    }
    return false;
}

} // namespace

bool creates_cycle(const Genome& g, int from, int to) {
    if (from == to) return true;
    return path_exists(enabled_adjacency(g), to, from);
}

bool is_acyclic(const Genome& g) {
    // Kahn over the enabled graph.
    std::map<int, int> indegree;
    for (const auto& n : g.nodes) indegree[n.id] = 0;
    auto adj = enabled_adjacency(g);
    for (const auto& [v, outs] : adj)
        for (int w : outs) ++indegree[w];
    std::vector<int> ready;
    for (const auto& [v, d] : indegree)
        if (d == 0) ready.push_back(v);
    std::size_t processed = 0;
    while (!ready.empty()) {
        const int v = ready.back();
        ready.pop_back();
        ++processed;
        for (int w : adj[v])
            if (--indegree[w] == 0) ready.push_back(w);
    }
    return processed == g.nodes.size();
}

void validate(const Genome& g) {
    std::set<int> node_ids;
    for (const auto& n : g.nodes)
        if (!node_ids.insert(n.id).second)
            throw std::invalid_argument("duplicate node id " + std::to_string(n.id));
    std::set<int> conn_ids;
    std::set<std::pair<int, int>> enabled_pairs;
    for (const auto& c : g.connections) {
        if (!conn_ids.insert(c.id).second)
            throw std::invalid_argument("duplicate connection id " + std::to_string(c.id));
        if (node_ids.count(c.id))
            throw std::invalid_argument("gene id reused across node and connection: " + std::to_string(c.id));
        if (!node_ids.count(c.from) || !node_ids.count(c.to))
            throw std::invalid_argument("connection endpoint missing for gene " + std::to_string(c.id));
        const NodeGene* from = g.find_node(c.from);
        const NodeGene* to = g.find_node(c.to);
        if (to->kind == NodeKind::input)
            throw std::invalid_argument("connection terminates at input node " + std::to_string(c.to));
        if (from->kind == NodeKind::output)
            throw std::invalid_argument("connection originates at output node " + std::to_string(c.from));
        if (c.enabled && !enabled_pairs.insert({c.from, c.to}).second)
            throw std::invalid_argument("duplicate enabled connection " + std::to_string(c.from) +
                                        "->" + std::to_string(c.to));
    }
    if (!is_acyclic(g))
        throw std::invalid_argument("enabled connection graph contains a cycle");
}

void EvolutionConfig::validate() const {
    auto probability = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigInvalid(std::string(name) + " must be in [0,1]");
    };
    probability(p_add_connection, "p_add_connection");
    probability(p_remove_connection, "p_remove_connection");
    probability(p_add_node, "p_add_node");
    probability(p_remove_node, "p_remove_node");
    probability(p_reinit_weights, "p_reinit_weights");
    probability(p_perturb_weight, "p_perturb_weight");
    probability(p_replace_weight, "p_replace_weight");
    if (population_size < 2)
        throw ConfigInvalid("population_size must be >= 2");
    if (generations < 0)
        throw ConfigInvalid("generations must be >= 0");
    if (epochs_per_generation < 1)
        throw ConfigInvalid("epochs_per_generation must be >= 1");
    if (batch_size < 0)
        throw ConfigInvalid("batch_size must be >= 0 (0 = full batch)");
    if (!(elimination_fraction > 0.0 && elimination_fraction < 1.0))
        throw ConfigInvalid("elimination_fraction must be in (0,1)");
    if (!(weight_init.stddev >= 0.0))
        throw ConfigInvalid("weight_init.stddev must be >= 0");
    if (!(compatibility_threshold >= 0.0))
        throw ConfigInvalid("compatibility_threshold must be >= 0");
}

int InnovationTracker::connection_id(int from, int to) {
    auto it = connection_cache_.find({from, to});
    if (it != connection_cache_.end()) return it->second;
    const int id = next_++;
    connection_cache_.emplace(std::make_pair(from, to), id);
    return id;
}

InnovationTracker::NodeSplit InnovationTracker::node_split(int split_connection_id) {
    auto it = split_cache_.find(split_connection_id);
    if (it != split_cache_.end()) return it->second;
    NodeSplit s{next_, next_ + 1, next_ + 2};
    next_ += 3;
    split_cache_.emplace(split_connection_id, s);
    return s;
}

void InnovationTracker::begin_generation() {
    connection_cache_.clear();
    split_cache_.clear();
}

bool connection_is_legal(const Genome& g, int from, int to) {
    if (from == to) return false;
    const NodeGene* f = g.find_node(from);
    const NodeGene* t = g.find_node(to);
    if (!f || !t) return false;
    if (f->kind == NodeKind::output) return false;
    if (t->kind == NodeKind::input) return false;
    if (g.find_connection(from, to)) return false;
    return !creates_cycle(g, from, to);
}

Genome mutate_add_connection(const Genome& g, InnovationTracker& innovations,
                             const WeightInit& init, Rng& rng) {
    if (g.nodes.size() < 2) return g;
    std::vector<int> ids;
    ids.reserve(g.nodes.size());
    for (const auto& n : g.nodes) ids.push_back(n.id);

    constexpr int kMaxAttempts = 64;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const int from = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ids.size()) - 1))];
        const int to = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ids.size()) - 1))];
        if (!connection_is_legal(g, from, to)) continue;
        Genome child = g;
        child.fitness.reset();
        ConnectionGene c;
        c.id = innovations.connection_id(from, to);
        c.from = from;
        c.to = to;
        c.weight = rng.normal(init.mean, init.stddev);
        c.enabled = true;
        child.connections.push_back(c);
        sort_genes(child);
        return child;
    }
    return g;
}

Genome mutate_add_node(const Genome& g, InnovationTracker& innovations, Rng& rng) {
    std::vector<std::size_t> enabled;
    for (std::size_t i = 0; i < g.connections.size(); ++i)
        if (g.connections[i].enabled) enabled.push_back(i);
    if (enabled.empty()) return g;

    const std::size_t pick = enabled[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(enabled.size()) - 1))];
    Genome child = g;
    child.fitness.reset();
    child.connections[pick].enabled = false;
    const ConnectionGene split = child.connections[pick];

    const auto ids = innovations.node_split(split.id);
    NodeGene m;
    m.id = ids.node_id;
    m.kind = NodeKind::hidden;
    m.bias = 0.0;
    child.nodes.push_back(m);
    // Classic split: in-edge carries weight 1, out-edge carries the old weight.
    child.connections.push_back({ids.in_connection_id, split.from, m.id, 1.0, true});
    child.connections.push_back({ids.out_connection_id, m.id, split.to, split.weight, true});
    sort_genes(child);
    return child;
}

Genome mutate_remove_connection(const Genome& g, Rng& rng) {
    std::vector<std::size_t> enabled;
    for (std::size_t i = 0; i < g.connections.size(); ++i)
        if (g.connections[i].enabled) enabled.push_back(i);
    if (enabled.empty()) return g;
    const std::size_t pick = enabled[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(enabled.size()) - 1))];
    Genome child = g;
    child.fitness.reset();
    child.connections.erase(child.connections.begin() + static_cast<std::ptrdiff_t>(pick));
    return child;
}

Genome mutate_remove_node(const Genome& g, Rng& rng) {
    std::vector<int> hidden;
    for (const auto& n : g.nodes)
        if (n.kind == NodeKind::hidden) hidden.push_back(n.id);
    if (hidden.empty()) return g;
    const int victim = hidden[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(hidden.size()) - 1))];
    Genome child = g;
    child.fitness.reset();
    child.nodes.erase(std::remove_if(child.nodes.begin(), child.nodes.end(),
                                     [&](const NodeGene& n) { return n.id == victim; }),
                      child.nodes.end());
    child.connections.erase(
        std::remove_if(child.connections.begin(), child.connections.end(),
                       [&](const ConnectionGene& c) { return c.from == victim || c.to == victim; }),
        child.connections.end());
    return child;
}

Genome mutate_reinit_weights(const Genome& g, const WeightInit& init, Rng& rng) {
    Genome child = g;
    child.fitness.reset();
    for (auto& c : child.connections) c.weight = rng.normal(init.mean, init.stddev);
    for (auto& n : child.nodes)
        if (n.kind != NodeKind::input) n.bias = 0.0;
    return child;
}

Genome mutate_perturb_weights(const Genome& g, double p_perturb, double perturb_stddev,
                              double p_replace, const WeightInit& init, Rng& rng) {
    Genome child = g;
    child.fitness.reset();
    auto mutate_value = [&](double& v) {
        if (rng.uniform() < p_replace) {
            v = rng.normal(init.mean, init.stddev);
        } else if (rng.uniform() < p_perturb) {
            v += rng.normal(0.0, perturb_stddev);
        }
    };
    for (auto& c : child.connections) mutate_value(c.weight);
    for (auto& n : child.nodes)
        if (n.kind != NodeKind::input) mutate_value(n.bias);
    return child;
}

Genome crossover(const Genome& a, const Genome& b, Rng& rng) {
    if (!a.fitness.has_value() || !b.fitness.has_value())
        throw std::invalid_argument("crossover requires fitness on both parents");
    const Genome& fitter = (*b.fitness > *a.fitness) ? b : a;
    const Genome& other = (&fitter == &a) ? b : a;

    Genome child;
    child.nodes.reserve(fitter.nodes.size());
    for (const auto& n : fitter.nodes) {
        NodeGene gene = n;
        for (const auto& o : other.nodes) {
            if (o.id == n.id) {
                if (rng.uniform() < 0.5) gene.bias = o.bias;
                break;
            }
        }
        child.nodes.push_back(gene);
    }
    for (const auto& c : fitter.connections) {
        ConnectionGene gene = c;
        for (const auto& o : other.connections) {
            if (o.id == c.id) {
                if (rng.uniform() < 0.5) {
                    gene.weight = o.weight;
                    gene.enabled = o.enabled;
                }
                break;
            }
        }
        child.connections.push_back(gene);
    }
    sort_genes(child);

    // Mixing enabled flags can close a cycle that neither parent had; drop
    // offending connections deterministically by ascending innovation id.
    Genome accepted;
    accepted.nodes = child.nodes;
    std::vector<ConnectionGene> kept;
    for (const auto& c : child.connections) {
        if (c.enabled) {
            Genome probe;
            probe.nodes = accepted.nodes;
            probe.connections = kept;
            if (creates_cycle(probe, c.from, c.to)) continue;
        }
        kept.push_back(c);
    }
    child.connections = std::move(kept);
    child.fitness.reset();
    child.species_id.reset();
    return child;
}

double compatibility_distance(const Genome& a, const Genome& b,
                              const SpeciationCoefficients& c) {
    // Classic formula over connection genes aligned by innovation id.
    std::size_t ia = 0, ib = 0;
    int disjoint = 0, excess = 0, matching = 0;
    double weight_diff = 0.0;
    const int max_a = a.connections.empty() ? -1 : a.connections.back().id;
    const int max_b = b.connections.empty() ? -1 : b.connections.back().id;
    while (ia < a.connections.size() || ib < b.connections.size()) {
        if (ia == a.connections.size()) {
            ++excess;
            ++ib;
        } else if (ib == b.connections.size()) {
            ++excess;
            ++ia;
        } else {
            const int ida = a.connections[ia].id;
            const int idb = b.connections[ib].id;
            if (ida == idb) {
                ++matching;
                weight_diff += std::abs(a.connections[ia].weight - b.connections[ib].weight);
                ++ia;
                ++ib;
            } else if (ida < idb) {
                (ida > max_b ? excess : disjoint) += 1;
                ++ia;
            } else {
                (idb > max_a ? excess : disjoint) += 1;
                ++ib;
            }
        }
    }
    const double n = static_cast<double>(
        std::max<std::size_t>(1, std::max(a.connections.size(), b.connections.size())));
    const double mean_weight_diff = matching > 0 ? weight_diff / matching : 0.0;
    return c.excess * excess / n + c.disjoint * disjoint / n + c.weight * mean_weight_diff;
}

Speciation speciate(const std::vector<Genome>& population,
                    const std::vector<Genome>& prev_representatives,
                    double threshold, const SpeciationCoefficients& c) {
    Speciation out;
    out.assignment.assign(population.size(), -1);
    std::vector<const Genome*> reps;
    for (const auto& r : prev_representatives) reps.push_back(&r);
    std::vector<int> first_member(reps.size(), -1);

    for (std::size_t i = 0; i < population.size(); ++i) {
        int assigned = -1;
        for (std::size_t s = 0; s < reps.size(); ++s) {
            if (compatibility_distance(population[i], *reps[s], c) <= threshold) {
                assigned = static_cast<int>(s);
                break;
            }
        }
        if (assigned < 0) {
            assigned = static_cast<int>(reps.size());
            reps.push_back(&population[i]);
            first_member.push_back(-1);
        }
        out.assignment[i] = assigned;
        if (first_member[static_cast<std::size_t>(assigned)] < 0)
            first_member[static_cast<std::size_t>(assigned)] = static_cast<int>(i);
    }

    // Species that attracted no genome this generation disappear; renumber the
    // survivors in order and record their new representatives.
    std::vector<int> remap(reps.size(), -1);
    for (std::size_t s = 0; s < first_member.size(); ++s) {
        if (first_member[s] >= 0) {
            remap[s] = static_cast<int>(out.next_representatives.size());
            out.next_representatives.push_back(population[static_cast<std::size_t>(first_member[s])]);
        }
    }
    for (auto& a : out.assignment) a = remap[static_cast<std::size_t>(a)];
    return out;
}

std::string to_text(const Genome& g) {
    std::string out = "propneat-genome v1\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "nodes %zu\n", g.nodes.size());
    out += buf;
    for (const auto& n : g.nodes) {
        std::snprintf(buf, sizeof buf, "node %d %s %.17g\n", n.id, to_string(n.kind), n.bias);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "connections %zu\n", g.connections.size());
    out += buf;
    for (const auto& c : g.connections) {
        std::snprintf(buf, sizeof buf, "conn %d %d %d %.17g %d\n", c.id, c.from, c.to, c.weight,
                      c.enabled ? 1 : 0);
        out += buf;
    }
    return out;
}

Genome genome_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "propneat-genome v1")
        throw ParseError("bad genome header: expected 'propneat-genome v1'");
    Genome g;
    std::size_t n_nodes = 0, n_conns = 0;
    if (!(in >> line >> n_nodes) || line != "nodes")
        throw ParseError("bad genome: expected node count");
    for (std::size_t i = 0; i < n_nodes; ++i) {
        std::string tag, kind;
        NodeGene n;
        if (!(in >> tag >> n.id >> kind >> n.bias) || tag != "node")
            throw ParseError("bad genome node record");
        n.kind = node_kind_from_string(kind);
        g.nodes.push_back(n);
    }
    if (!(in >> line >> n_conns) || line != "connections")
        throw ParseError("bad genome: expected connection count");
    for (std::size_t i = 0; i < n_conns; ++i) {
        std::string tag;
        ConnectionGene c;
        int enabled = 0;
        if (!(in >> tag >> c.id >> c.from >> c.to >> c.weight >> enabled) || tag != "conn")
            throw ParseError("bad genome connection record");
        c.enabled = enabled != 0;
        g.connections.push_back(c);
    }
    sort_genes(g);
    validate(g);
    return g;
}

void save_genome(const Genome& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write genome file: " + path.string());
    out << to_text(g);
}

Genome load_genome(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read genome file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return genome_from_text(ss.str());
}

} // namespace propneat
