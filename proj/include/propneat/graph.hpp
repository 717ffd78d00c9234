#pragma once

#include <map>
#include <string>
#include <vector>

#include "propneat/genome.hpp"

namespace propneat {

// Inbound/outbound edge as seen from one node, over enabled connections only.
struct EdgeRef {
    int connection_id;
    int peer; // from-node for inbound, to-node for outbound
};

struct NodeAnalysis {
    int id = 0;
    NodeKind kind = NodeKind::hidden;
    int depth = 0; // longest input-to-node path; 0 when not forward-reachable
    bool reachable_forward = false;
    bool reachable_backward = false;
    std::vector<EdgeRef> inbound;  // ascending connection id
    std::vector<EdgeRef> outbound; // ascending connection id
    std::vector<int> inbound_depths;
    std::vector<int> outbound_depths;
    bool is_input = false;
    bool is_output = false;
};

struct GraphAnalysis {
    std::vector<NodeAnalysis> nodes; // ascending node id
    const NodeAnalysis& at(int node_id) const;
    const NodeAnalysis* find(int node_id) const;
};

// Depth, reachability, and connectivity over the enabled graph. Disabled
// connections are ignored throughout. Throws CycleDetected on a non-DAG.
GraphAnalysis analyze(const Genome& g);

enum class LayerKind { input, connected, output };

struct Layer {
    int index = 0; // equals node depth
    LayerKind kind = LayerKind::connected;
    std::vector<int> node_ids; // ascending gene id
    int output_dim = 0;        // node count
    bool has_skip_inputs = false;
    bool has_skip_outputs = false;
    std::vector<int> source_layers;  // increasing depth, only layers with >=1 inbound edge
    std::vector<int> source_offsets; // concatenation offset per source layer
    int input_dim = 0;               // sum of source output dims
};

struct NodeSlot {
    int layer = 0;
    int index = 0;
};

struct LayerPlan {
    std::vector<Layer> layers; // size k+1, k = depth of deepest output
    std::map<int, NodeSlot> node_slot;
    int placed_connection_count = 0;

    int offset_of_source(int layer_index, int source_layer) const; // -1 when absent
};

// Nodes reachable in both directions are placed at their depth; inputs always
// occupy layer 0 and outputs layer k. Throws UntrainableGenome when no
// input-to-output path exists.
LayerPlan build_layer_plan(const GraphAnalysis& analysis);

// Structured text dump (layer index, kind, node ids, dims, skip sources).
std::string describe(const LayerPlan& plan);

} // namespace propneat
