#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "propneat/genome.hpp"
#include "propneat/rng.hpp"
#include "propneat/tensor.hpp"

namespace propneat::testing {

// Reference network used across suites: three inputs (ids 0,1,2), hidden
// layer [4,5] at depth 1, hidden layer [6,7,8] at depth 2, output 3 at
// depth 3. Thirteen connections, one of which (5 -> 3) skips a layer, and
// input 2 does not feed node 4. Compiles to tensors of shapes 2x3, 3x2, 1x5.
inline Genome make_skip_example_genome(Rng* rng = nullptr) {
    Genome g;
    g.nodes = {
        {0, NodeKind::input, 0.0},  {1, NodeKind::input, 0.0},  {2, NodeKind::input, 0.0},
        {3, NodeKind::output, 0.0}, {4, NodeKind::hidden, 0.0}, {5, NodeKind::hidden, 0.0},
        {6, NodeKind::hidden, 0.0}, {7, NodeKind::hidden, 0.0}, {8, NodeKind::hidden, 0.0},
    };
    const std::vector<std::pair<int, int>> edges = {
        {0, 4}, {0, 5}, {1, 4}, {1, 5}, {2, 5}, // inputs to depth-1 pair
        {4, 6}, {4, 7}, {5, 6}, {5, 8},         // depth-1 to depth-2
        {5, 3},                                 // the skip connection
        {6, 3}, {7, 3}, {8, 3},
    };
    int id = 9;
    for (const auto& [from, to] : edges) {
        const double w = rng ? rng->normal(0.0, 1.0) : 0.0;
        g.connections.push_back({id++, from, to, w, true});
    }
    return g;
}

// Random single-output DAG genome. Hidden nodes receive a random topological
// rank so edges always point forward; a direct input->output edge keeps the
// genome compilable. Disconnected hidden nodes and dead ends appear freely.
inline Genome random_dag_genome(Rng& rng, int max_nodes = 30, int max_connections = 80,
                                int max_inputs = 8) {
    const int n_inputs = rng.uniform_int(1, max_inputs);
    const int n_hidden = rng.uniform_int(0, std::max(0, max_nodes - n_inputs - 1));
    Genome g;
    int id = 0;
    for (int i = 0; i < n_inputs; ++i) g.nodes.push_back({id++, NodeKind::input, 0.0});
    const int output = id;
    g.nodes.push_back({id++, NodeKind::output, rng.normal(0.0, 1.0)});
    std::vector<int> hidden;
    for (int i = 0; i < n_hidden; ++i) {
        g.nodes.push_back({id, NodeKind::hidden, rng.normal(0.0, 1.0)});
        hidden.push_back(id++);
    }
    rng.shuffle(hidden); // position in this vector is the topological rank

    auto hidden_rank = [&](int node) {
        for (std::size_t i = 0; i < hidden.size(); ++i)
            if (hidden[i] == node) return static_cast<int>(i);
        return -1;
    };
    auto edge_allowed = [&](int from, int to) {
        if (from == to) return false;
        const NodeGene* f = g.find_node(from);
        const NodeGene* t = g.find_node(to);
        if (f->kind == NodeKind::output || t->kind == NodeKind::input) return false;
        if (f->kind == NodeKind::hidden && t->kind == NodeKind::hidden)
            return hidden_rank(from) < hidden_rank(to);
        return true;
    };

    std::vector<int> all_ids;
    for (const auto& n : g.nodes) all_ids.push_back(n.id);
    const int want = rng.uniform_int(1, max_connections);
    g.connections.push_back({id++, rng.uniform_int(0, n_inputs - 1), output,
                             rng.normal(0.0, 1.0), true});
    for (int attempt = 0; attempt < 4 * want && static_cast<int>(g.connections.size()) < want;
         ++attempt) {
        const int from = all_ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(all_ids.size()) - 1))];
        const int to = all_ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(all_ids.size()) - 1))];
        if (!edge_allowed(from, to) || g.find_connection(from, to)) continue;
        const bool enabled = rng.uniform() > 0.1;
        g.connections.push_back({id++, from, to, rng.normal(0.0, 1.0), enabled});
    }
    return g;
}

inline Matrix random_batch(Rng& rng, int rows, int cols, double lo = -2.0, double hi = 2.0) {
    Matrix m(rows, cols);
    for (auto& v : m.values()) v = rng.uniform(lo, hi);
    return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
    return worst;
}

} // namespace propneat::testing
