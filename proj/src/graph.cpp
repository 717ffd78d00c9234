#include "propneat/graph.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>
#include <stdexcept>

#include "propneat/errors.hpp"

namespace propneat {

const NodeAnalysis& GraphAnalysis::at(int node_id) const {
    const NodeAnalysis* n = find(node_id);
    if (!n) throw std::out_of_range("no analysis for node " + std::to_string(node_id));
    return *n;
}

const NodeAnalysis* GraphAnalysis::find(int node_id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), node_id,
                               [](const NodeAnalysis& a, int id) { return a.id < id; });
    if (it == nodes.end() || it->id != node_id) return nullptr;
    return &*it;
}

GraphAnalysis analyze(const Genome& g) {
    GraphAnalysis out;
    out.nodes.reserve(g.nodes.size());
    std::map<int, std::size_t> index;
    for (const auto& n : g.nodes) {
        NodeAnalysis a;
        a.id = n.id;
        a.kind = n.kind;
        a.is_input = n.kind == NodeKind::input;
        a.is_output = n.kind == NodeKind::output;
        index[n.id] = out.nodes.size();
        out.nodes.push_back(a);
    }
    std::sort(out.nodes.begin(), out.nodes.end(),
              [](const NodeAnalysis& a, const NodeAnalysis& b) { return a.id < b.id; });
    index.clear();
    for (std::size_t i = 0; i < out.nodes.size(); ++i) index[out.nodes[i].id] = i;

    for (const auto& c : g.connections) {
        if (!c.enabled) continue;
        out.nodes[index.at(c.to)].inbound.push_back({c.id, c.from});
        out.nodes[index.at(c.from)].outbound.push_back({c.id, c.to});
    }
    for (auto& n : out.nodes) {
        std::sort(n.inbound.begin(), n.inbound.end(),
                  [](const EdgeRef& a, const EdgeRef& b) { return a.connection_id < b.connection_id; });
        std::sort(n.outbound.begin(), n.outbound.end(),
                  [](const EdgeRef& a, const EdgeRef& b) { return a.connection_id < b.connection_id; });
    }

    // Topological order via Kahn; a leftover node means a cycle.
    std::vector<int> indegree(out.nodes.size(), 0);
    for (const auto& n : out.nodes)
        indegree[index.at(n.id)] = static_cast<int>(n.inbound.size());
    std::vector<std::size_t> ready, order;
    for (std::size_t i = 0; i < out.nodes.size(); ++i)
        if (indegree[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        const std::size_t v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (const auto& e : out.nodes[v].outbound) {
            const std::size_t w = index.at(e.peer);
            if (--indegree[w] == 0) ready.push_back(w);
        }
    }
    if (order.size() != out.nodes.size())
        throw CycleDetected("enabled connection graph is not acyclic");

    // Forward pass in topological order: depth is the longest path from any
    // input, and forward reachability propagates along it.
    for (const std::size_t v : order) {
        NodeAnalysis& n = out.nodes[v];
        if (n.is_input) {
            n.reachable_forward = true;
            n.depth = 0;
            continue;
        }
        int depth = -1;
        for (const auto& e : n.inbound) {
            const NodeAnalysis& u = out.nodes[index.at(e.peer)];
            if (u.reachable_forward) depth = std::max(depth, u.depth + 1);
        }
        n.reachable_forward = depth >= 0;
        n.depth = std::max(depth, 0);
    }

    // Backward pass in reverse topological order.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        NodeAnalysis& n = out.nodes[*it];
        if (n.is_output) {
            n.reachable_backward = true;
            continue;
        }
        for (const auto& e : n.outbound) {
            if (out.nodes[index.at(e.peer)].reachable_backward) {
                n.reachable_backward = true;
                break;
            }
        }
    }

    for (auto& n : out.nodes) {
        for (const auto& e : n.inbound) n.inbound_depths.push_back(out.nodes[index.at(e.peer)].depth);
        for (const auto& e : n.outbound) n.outbound_depths.push_back(out.nodes[index.at(e.peer)].depth);
    }
    return out;
}

int LayerPlan::offset_of_source(int layer_index, int source_layer) const {
    const Layer& layer = layers.at(static_cast<std::size_t>(layer_index));
    for (std::size_t i = 0; i < layer.source_layers.size(); ++i)
        if (layer.source_layers[i] == source_layer) return layer.source_offsets[i];
    return -1;
}

LayerPlan build_layer_plan(const GraphAnalysis& analysis) {
    int deepest_output = -1;
    for (const auto& n : analysis.nodes)
        if (n.is_output && n.reachable_forward)
            deepest_output = std::max(deepest_output, n.depth);
    if (deepest_output < 0)
        throw UntrainableGenome("no input-to-output path exists");
    const int k = deepest_output;

    LayerPlan plan;
    plan.layers.resize(static_cast<std::size_t>(k) + 1);
    for (int d = 0; d <= k; ++d) {
        plan.layers[static_cast<std::size_t>(d)].index = d;
        plan.layers[static_cast<std::size_t>(d)].kind =
            d == 0 ? LayerKind::input : (d == k ? LayerKind::output : LayerKind::connected);
    }

    // Placement: inputs at layer 0, outputs at layer k, hidden nodes at their
    // depth when reachable in both directions. Node analyses are already in
    // ascending gene-id order, which fixes the within-layer ordering.
    auto placed_layer = [&](const NodeAnalysis& n) -> int {
        if (n.is_input) return 0;
        if (n.is_output) return k;
        if (n.reachable_forward && n.reachable_backward) return n.depth;
        return -1;
    };
    for (const auto& n : analysis.nodes) {
        const int layer = placed_layer(n);
        if (layer < 0) continue;
        Layer& l = plan.layers[static_cast<std::size_t>(layer)];
        plan.node_slot[n.id] = {layer, static_cast<int>(l.node_ids.size())};
        l.node_ids.push_back(n.id);
        ++l.output_dim;
    }
    for (int d = 1; d < k; ++d)
        assert(plan.layers[static_cast<std::size_t>(d)].output_dim > 0 &&
               "intermediate layers are non-empty when an output is reachable");

    // Source layers and skip structure. A source layer is listed only when at
    // least one inbound connection from a placed node exists at that depth.
    for (int d = 1; d <= k; ++d) {
        Layer& l = plan.layers[static_cast<std::size_t>(d)];
        std::vector<int> sources;
        for (int id : l.node_ids) {
            const NodeAnalysis& n = analysis.at(id);
            for (const auto& e : n.inbound) {
                auto slot = plan.node_slot.find(e.peer);
                if (slot == plan.node_slot.end()) continue; // unplaced source
                sources.push_back(slot->second.layer);
                ++plan.placed_connection_count;
            }
        }
        std::sort(sources.begin(), sources.end());
        sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
        l.source_layers = sources;
        int offset = 0;
        for (int s : sources) {
            l.source_offsets.push_back(offset);
            offset += plan.layers[static_cast<std::size_t>(s)].output_dim;
        }
        l.input_dim = offset;
        l.has_skip_inputs = !sources.empty() && sources.front() < d - 1;
    }
    for (int d = 0; d <= k; ++d) {
        Layer& l = plan.layers[static_cast<std::size_t>(d)];
        for (int id : l.node_ids) {
            const NodeAnalysis& n = analysis.at(id);
            for (const auto& e : n.outbound) {
                auto slot = plan.node_slot.find(e.peer);
                if (slot != plan.node_slot.end() && slot->second.layer > d + 1) {
                    l.has_skip_outputs = true;
                    break;
                }
            }
            if (l.has_skip_outputs) break;
        }
    }
    return plan;
}

std::string describe(const LayerPlan& plan) {
    std::ostringstream out;
    out << "layers " << plan.layers.size() << "\n";
    for (const auto& l : plan.layers) {
        out << "layer " << l.index;
        switch (l.kind) {
        case LayerKind::input: out << " kind=input"; break;
        case LayerKind::connected: out << " kind=connected"; break;
        case LayerKind::output: out << " kind=output"; break;
        }
        out << " dim=" << l.output_dim << " nodes=[";
        for (std::size_t i = 0; i < l.node_ids.size(); ++i)
            out << (i ? "," : "") << l.node_ids[i];
        out << "]";
        if (l.index > 0) {
            out << " input_dim=" << l.input_dim << " sources=[";
            for (std::size_t i = 0; i < l.source_layers.size(); ++i)
                out << (i ? "," : "") << l.source_layers[i] << "@" << l.source_offsets[i];
            out << "]"
                << " skip_in=" << (l.has_skip_inputs ? 1 : 0);
        }
        out << " skip_out=" << (l.has_skip_outputs ? 1 : 0) << "\n";
    }
    return out.str();
}

} // namespace propneat
