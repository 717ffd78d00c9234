#include "propneat/naive.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "propneat/errors.hpp"

namespace propneat {

// The naive path deliberately redoes its own small graph walks instead of
// reusing the layer-plan machinery, so it can stand as an independent oracle
// for the compiled path.

namespace {

struct NaiveGraph {
    std::vector<int> node_ids; // ascending
    std::map<int, NodeKind> kind;
    std::map<int, double> bias;
    std::map<int, std::vector<const ConnectionGene*>> inbound; // enabled, gene-id order
    std::map<int, std::vector<const ConnectionGene*>> outbound;
    std::set<int> forward_reachable;
    std::set<int> backward_reachable;
};

NaiveGraph build_graph(const Genome& g) {
    NaiveGraph n;
    for (const auto& node : g.nodes) {
        n.node_ids.push_back(node.id);
        n.kind[node.id] = node.kind;
        n.bias[node.id] = node.bias;
        n.inbound[node.id];
        n.outbound[node.id];
    }
    std::sort(n.node_ids.begin(), n.node_ids.end());
    for (const auto& c : g.connections) {
        if (!c.enabled) continue;
        n.inbound[c.to].push_back(&c);
        n.outbound[c.from].push_back(&c);
    }

    std::vector<int> frontier;
    for (const auto& node : g.nodes)
        if (node.kind == NodeKind::input) {
            n.forward_reachable.insert(node.id);
            frontier.push_back(node.id);
        }
    while (!frontier.empty()) {
        const int v = frontier.back();
        frontier.pop_back();
        for (const auto* c : n.outbound[v])
            if (n.forward_reachable.insert(c->to).second) frontier.push_back(c->to);
    }
    for (const auto& node : g.nodes)
        if (node.kind == NodeKind::output) {
            n.backward_reachable.insert(node.id);
            frontier.push_back(node.id);
        }
    while (!frontier.empty()) {
        const int v = frontier.back();
        frontier.pop_back();
        for (const auto* c : n.inbound[v])
            if (n.backward_reachable.insert(c->from).second) frontier.push_back(c->from);
    }
    return n;
}

} // namespace

std::vector<int> node_schedule(const Genome& g) {
    std::map<int, int> indegree;
    std::map<int, std::vector<int>> adj;
    for (const auto& n : g.nodes) indegree[n.id] = 0;
    for (const auto& c : g.connections) {
        if (!c.enabled) continue;
        adj[c.from].push_back(c.to);
        ++indegree[c.to];
    }
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (const auto& [id, d] : indegree)
        if (d == 0) ready.push(id);
    std::vector<int> order;
    while (!ready.empty()) {
        const int v = ready.top();
        ready.pop();
        order.push_back(v);
        for (int w : adj[v])
            if (--indegree[w] == 0) ready.push(w);
    }
    if (order.size() != g.nodes.size())
        throw CycleDetected("enabled connection graph is not acyclic");
    return order;
}

Matrix evaluate_naive(const Genome& g, const Matrix& x) {
    const std::vector<int> inputs = g.input_ids();
    const std::vector<int> outputs = g.output_ids();
    if (x.rows() != static_cast<int>(inputs.size()))
        throw DimensionMismatch("evaluate_naive: expected " + std::to_string(inputs.size()) +
                                " input rows, got " + std::to_string(x.rows()));
    const int n = x.cols();
    const NaiveGraph graph = build_graph(g);
    const std::vector<int> schedule = node_schedule(g);

    std::map<int, std::vector<double>> value;
    std::map<int, int> input_row;
    for (std::size_t i = 0; i < inputs.size(); ++i) input_row[inputs[i]] = static_cast<int>(i);

    for (int id : schedule) {
        const NodeKind kind = graph.kind.at(id);
        std::vector<double>& v = value[id];
        v.assign(static_cast<std::size_t>(n), 0.0);
        if (kind == NodeKind::input) {
            const int row = input_row.at(id);
            for (int b = 0; b < n; ++b) v[static_cast<std::size_t>(b)] = x(row, b);
            continue;
        }
        if (!graph.forward_reachable.count(id)) continue; // no value; reads as zero downstream
        const double bias = graph.bias.at(id);
        for (int b = 0; b < n; ++b) {
            double z = bias;
            for (const auto* c : graph.inbound.at(id))
                z += c->weight * value.at(c->from)[static_cast<std::size_t>(b)];
            v[static_cast<std::size_t>(b)] =
                kind == NodeKind::output ? 1.0 / (1.0 + std::exp(-z)) : (z > 0.0 ? z : 0.0);
        }
    }

    Matrix out(static_cast<int>(outputs.size()), n);
    for (std::size_t r = 0; r < outputs.size(); ++r)
        for (int b = 0; b < n; ++b)
            out(static_cast<int>(r), b) = value.at(outputs[r])[static_cast<std::size_t>(b)];
    return out;
}

std::vector<double> evaluate_naive(const Genome& g, const std::vector<double>& input) {
    const Matrix out = evaluate_naive(g, Matrix::column(input));
    return out.values();
}

NaiveTrainResult train_naive(const Genome& g, const Matrix& x, const Matrix& y,
                             const TrainConfig& cfg) {
    NaiveTrainResult result;
    result.genome = g;
    Genome& genome = result.genome;

    NaiveGraph graph = build_graph(genome);
    bool trainable = false;
    for (int id : graph.node_ids)
        if (graph.kind.at(id) == NodeKind::output && graph.forward_reachable.count(id))
            trainable = true;
    if (!trainable) throw UntrainableGenome("no input-to-output path exists");

    auto placed = [&](int id) {
        if (graph.kind.at(id) == NodeKind::input) return true;
        if (graph.kind.at(id) == NodeKind::output) return graph.forward_reachable.count(id) > 0;
        return graph.forward_reachable.count(id) > 0 && graph.backward_reachable.count(id) > 0;
    };

    const std::vector<int> schedule = node_schedule(genome);
    const std::vector<int> inputs = genome.input_ids();
    const std::vector<int> outputs = genome.output_ids();
    if (x.rows() != static_cast<int>(inputs.size()))
        throw DimensionMismatch("train_naive: input row count mismatch");
    if (y.rows() != static_cast<int>(outputs.size()) || y.cols() != x.cols())
        throw DimensionMismatch("train_naive: target shape mismatch");
    const int n = x.cols();
    const double element_count = static_cast<double>(outputs.size()) * n;

    std::map<int, int> input_row, output_row;
    for (std::size_t i = 0; i < inputs.size(); ++i) input_row[inputs[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < outputs.size(); ++i) output_row[outputs[i]] = static_cast<int>(i);

    // Per-gene optimizer state; connection genes keyed by id, biases by node.
    std::map<int, AdadeltaScalar> weight_state, bias_state;

    // Forward/backward over the column range [c0, c1): the same contiguous
    // slicing the compiled trainer uses, so trajectories stay comparable.
    std::map<int, std::vector<double>> value;
    auto forward_pass = [&](int c0, int c1) {
        const int cols = c1 - c0;
        for (int id : schedule) {
            std::vector<double>& v = value[id];
            v.assign(static_cast<std::size_t>(cols), 0.0);
            const NodeKind kind = graph.kind.at(id);
            if (kind == NodeKind::input) {
                const int row = input_row.at(id);
                for (int b = 0; b < cols; ++b) v[static_cast<std::size_t>(b)] = x(row, c0 + b);
                continue;
            }
            if (!graph.forward_reachable.count(id)) continue;
            const double bias = graph.bias.at(id);
            for (int b = 0; b < cols; ++b) {
                double z = bias;
                for (const auto* c : graph.inbound.at(id))
                    z += c->weight * value.at(c->from)[static_cast<std::size_t>(b)];
                v[static_cast<std::size_t>(b)] =
                    kind == NodeKind::output ? 1.0 / (1.0 + std::exp(-z)) : (z > 0.0 ? z : 0.0);
            }
        }
    };
    auto slice_loss = [&](int c0, int c1) {
        double total = 0.0;
        for (std::size_t r = 0; r < outputs.size(); ++r) {
            const auto& v = value.at(outputs[r]);
            for (int b = 0; b < c1 - c0; ++b) {
                double p = v[static_cast<std::size_t>(b)];
                p = p < kBceEpsilon ? kBceEpsilon : (p > 1.0 - kBceEpsilon ? 1.0 - kBceEpsilon : p);
                const double t = y(static_cast<int>(r), c0 + b);
                total += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
            }
        }
        return total / (static_cast<double>(outputs.size()) * (c1 - c0));
    };

    const int batch = cfg.batch_size > 0 ? std::min(cfg.batch_size, n) : n;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        int steps = 0;
        for (int start = 0; start < n; start += batch) {
            const int end = std::min(n, start + batch);
            const int cols = end - start;
            const double slice_elements = static_cast<double>(outputs.size()) * cols;
            forward_pass(start, end);
            loss_sum += slice_loss(start, end);
            ++steps;

            // Reverse-order error propagation; delta is dL/d(pre-activation).
            std::map<int, std::vector<double>> downstream; // dL/d(value)
            for (int id : schedule) downstream[id].assign(static_cast<std::size_t>(cols), 0.0);
            std::map<int, double> weight_grad, bias_grad;

            for (auto it = schedule.rbegin(); it != schedule.rend(); ++it) {
                const int id = *it;
                if (!placed(id)) continue;
                const NodeKind kind = graph.kind.at(id);
                if (kind == NodeKind::input) continue;
                std::vector<double> dz(static_cast<std::size_t>(cols), 0.0);
                const std::vector<double>& v = value.at(id);
                if (kind == NodeKind::output) {
                    for (int b = 0; b < cols; ++b) {
                        const double p = v[static_cast<std::size_t>(b)];
                        // Matches the tape: sigmoid folded with clamped BCE.
                        dz[static_cast<std::size_t>(b)] =
                            (p < kBceEpsilon || p > 1.0 - kBceEpsilon)
                                ? 0.0
                                : (p - y(output_row.at(id), start + b)) / slice_elements;
                    }
                } else {
                    const std::vector<double>& dv = downstream.at(id);
                    for (int b = 0; b < cols; ++b)
                        dz[static_cast<std::size_t>(b)] = v[static_cast<std::size_t>(b)] > 0.0
                                                              ? dv[static_cast<std::size_t>(b)]
                                                              : 0.0;
                }
                double bg = 0.0;
                for (int b = 0; b < cols; ++b) bg += dz[static_cast<std::size_t>(b)];
                bias_grad[id] = bg;
                for (const auto* c : graph.inbound.at(id)) {
                    if (!placed(c->from)) continue;
                    double wg = 0.0;
                    const std::vector<double>& src = value.at(c->from);
                    std::vector<double>& up = downstream[c->from];
                    for (int b = 0; b < cols; ++b) {
                        wg += dz[static_cast<std::size_t>(b)] * src[static_cast<std::size_t>(b)];
                        up[static_cast<std::size_t>(b)] += c->weight * dz[static_cast<std::size_t>(b)];
                    }
                    weight_grad[c->id] = wg;
                }
            }

            for (auto& c : genome.connections) {
                auto it2 = weight_grad.find(c.id);
                if (it2 == weight_grad.end()) continue;
                c.weight += weight_state[c.id].step(it2->second, cfg.adadelta);
            }
            for (auto& node : genome.nodes) {
                auto it2 = bias_grad.find(node.id);
                if (it2 == bias_grad.end()) continue;
                node.bias += bias_state[node.id].step(it2->second, cfg.adadelta);
            }
            // The graph holds pointers into the genome, so connection weights
            // track automatically; biases are cached and need a refresh.
            for (const auto& node : genome.nodes) graph.bias[node.id] = node.bias;
        }
        result.loss_history.push_back(loss_sum / steps);
    }

    forward_pass(0, n);
    result.final_loss = slice_loss(0, n);
    return result;
}

} // namespace propneat
