#include "propneat/compile.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "propneat/errors.hpp"

namespace propneat {

CompiledNetwork compile(const Genome& g) {
    const GraphAnalysis analysis = analyze(g);
    CompiledNetwork net;
    net.plan = build_layer_plan(analysis);
    const int k = static_cast<int>(net.plan.layers.size()) - 1;

    for (int d = 1; d <= k; ++d) {
        const Layer& layer = net.plan.layers[static_cast<std::size_t>(d)];
        CompiledLayer cl;
        cl.depth = d;
        cl.weights = Matrix(layer.output_dim, layer.input_dim);
        cl.mask = Matrix(layer.output_dim, layer.input_dim);
        cl.bias = Matrix(layer.output_dim, 1);
        cl.source_layers = layer.source_layers;
        cl.source_offsets = layer.source_offsets;
        cl.sigmoid_output = layer.kind == LayerKind::output;

        for (int row = 0; row < layer.output_dim; ++row) {
            const int node_id = layer.node_ids[static_cast<std::size_t>(row)];
            cl.bias(row, 0) = g.find_node(node_id)->bias;
            const NodeAnalysis& n = analysis.at(node_id);
            for (const auto& e : n.inbound) {
                auto slot = net.plan.node_slot.find(e.peer);
                if (slot == net.plan.node_slot.end()) continue; // source not placed
                const int offset = net.plan.offset_of_source(d, slot->second.layer);
                const int col = offset + slot->second.index;
                cl.weights(row, col) = g.find_connection_by_id(e.connection_id)->weight;
                cl.mask(row, col) = 1.0;
            }
        }
        net.layers.push_back(std::move(cl));
    }
    return net;
}

namespace {

Matrix layer_input(const std::vector<Matrix>& outputs, const CompiledLayer& layer, int batch_cols) {
    if (layer.source_layers.empty()) return Matrix(0, batch_cols);
    std::vector<Matrix> parts;
    parts.reserve(layer.source_layers.size());
    for (int s : layer.source_layers) parts.push_back(outputs[static_cast<std::size_t>(s)]);
    return vconcat(parts);
}

} // namespace

Matrix forward(const CompiledNetwork& net, const Matrix& batch) {
    if (batch.rows() != net.input_dim())
        throw DimensionMismatch("forward: batch has " + std::to_string(batch.rows()) +
                                " features, network expects " + std::to_string(net.input_dim()));
    std::vector<Matrix> outputs(net.plan.layers.size());
    outputs[0] = batch;
    for (const auto& layer : net.layers) {
        Matrix z = layer.source_layers.empty()
                       ? Matrix(layer.weights.rows(), batch.cols())
                       : matmul(layer.weights, layer_input(outputs, layer, batch.cols()));
        z = add_bias(z, layer.bias);
        outputs[static_cast<std::size_t>(layer.depth)] = layer.sigmoid_output ? sigmoid(z) : relu(z);
    }
    return outputs.back();
}

Genome readback(const CompiledNetwork& net, const Genome& g) {
    if (!net.genome_mapped)
        throw MapMismatch("network has no genome mapping (minimal covering network)");
    Genome out = g;
    for (auto& c : out.connections) {
        if (!c.enabled) continue;
        auto from = net.plan.node_slot.find(c.from);
        auto to = net.plan.node_slot.find(c.to);
        if (from == net.plan.node_slot.end() || to == net.plan.node_slot.end())
            continue; // unplaced gene keeps its pre-training weight
        const CompiledLayer& layer = net.layers.at(static_cast<std::size_t>(to->second.layer) - 1);
        const int offset = net.plan.offset_of_source(to->second.layer, from->second.layer);
        if (offset < 0)
            throw MapMismatch("connection gene " + std::to_string(c.id) +
                              " has no source slot in the compiled network");
        const int col = offset + from->second.index;
        if (layer.mask(to->second.index, col) != 1.0)
            throw MapMismatch("connection gene " + std::to_string(c.id) +
                              " does not map to a masked-in position");
        c.weight = layer.weights(to->second.index, col);
    }
    for (auto& n : out.nodes) {
        if (n.kind == NodeKind::input) continue;
        auto slot = net.plan.node_slot.find(n.id);
        if (slot == net.plan.node_slot.end()) continue;
        n.bias = net.layers.at(static_cast<std::size_t>(slot->second.layer) - 1).bias(slot->second.index, 0);
    }
    return out;
}

double kaiming_stddev(int fan_in) {
    return std::sqrt(2.0 / static_cast<double>(fan_in < 1 ? 1 : fan_in));
}

MinimalCoveringNetwork minimal_covering(const CompiledNetwork& net, Rng& rng) {
    MinimalCoveringNetwork out{net};
    out.network.genome_mapped = false;
    for (auto& layer : out.network.layers) {
        const double stddev = kaiming_stddev(layer.weights.cols());
        for (auto& v : layer.weights.values()) v = rng.normal(0.0, stddev);
        layer.mask = Matrix::ones(layer.mask.rows(), layer.mask.cols());
        layer.bias = Matrix(layer.bias.rows(), 1);
    }
    return out;
}

std::string describe(const CompiledNetwork& net) {
    std::ostringstream out;
    out << describe(net.plan);
    for (const auto& layer : net.layers) {
        out << "tensor depth=" << layer.depth << " shape=" << layer.weights.rows() << "x"
            << layer.weights.cols() << (layer.sigmoid_output ? " act=sigmoid" : " act=relu") << "\n";
        for (int r = 0; r < layer.weights.rows(); ++r) {
            out << "  ";
            for (int c = 0; c < layer.weights.cols(); ++c) {
                char buf[48];
                std::snprintf(buf, sizeof buf, "%s%.17g", c ? " " : "", layer.weights(r, c));
                out << buf;
            }
            out << " | mask ";
            for (int c = 0; c < layer.mask.cols(); ++c) out << (layer.mask(r, c) != 0.0 ? '1' : '0');
            char buf[48];
            std::snprintf(buf, sizeof buf, " | bias %.17g", layer.bias(r, 0));
            out << buf << "\n";
        }
    }
    return out.str();
}

TrainResult train(CompiledNetwork& net, const Matrix& x, const Matrix& y,
                  const TrainConfig& cfg, const Matrix* x_val, const Matrix* y_val) {
    if (cfg.early_stopping && (!x_val || !y_val))
        throw ConfigInvalid("early stopping requires a validation set");

    TrainResult result;
    std::vector<AdadeltaState> weight_states, bias_states;
    for (const auto& layer : net.layers) {
        weight_states.emplace_back(layer.weights.rows(), layer.weights.cols());
        bias_states.emplace_back(layer.bias.rows(), 1);
    }
    const std::vector<Matrix> bias_masks = [&] {
        std::vector<Matrix> masks;
        for (const auto& layer : net.layers) masks.push_back(Matrix::ones(layer.bias.rows(), 1));
        return masks;
    }();

    double best_val = 0.0;
    bool has_best = false;
    int since_best = 0;
    std::vector<std::pair<Matrix, Matrix>> best_params; // (weights, bias) per layer

    const int n = x.cols();
    const int batch = cfg.batch_size > 0 ? std::min(cfg.batch_size, n) : n;
    auto slice_cols = [](const Matrix& m, int c0, int c1) {
        Matrix out(m.rows(), c1 - c0);
        for (int r = 0; r < m.rows(); ++r)
            for (int c = c0; c < c1; ++c) out(r, c - c0) = m(r, c);
        return out;
    };
    // Batches are contiguous and identical across epochs; materialize once.
    std::vector<std::pair<Matrix, Matrix>> batches;
    if (batch == n) {
        batches.emplace_back(x, y);
    } else {
        for (int start = 0; start < n; start += batch) {
            const int end = std::min(n, start + batch);
            batches.emplace_back(slice_cols(x, start, end), slice_cols(y, start, end));
        }
    }

    // One tape per batch, built on first use and replayed every epoch with
    // refreshed parameter leaves. Replay reuses every buffer in place.
    struct StepTape {
        Tape tape;
        std::vector<int> weight_ids, bias_ids;
        int loss = -1;
        bool built = false;
    };
    std::vector<StepTape> tapes(batches.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        double loss_sum = 0.0;
        int steps = 0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& [xb, yb] = batches[bi];
            StepTape& st = tapes[bi];
            if (!st.built) {
                std::vector<int> outputs(net.plan.layers.size(), -1);
                outputs[0] = st.tape.constant(xb);
                int prediction = -1;
                for (const auto& layer : net.layers) {
                    const int w = st.tape.parameter(layer.weights);
                    const int b = st.tape.parameter(layer.bias);
                    st.weight_ids.push_back(w);
                    st.bias_ids.push_back(b);
                    std::vector<int> parts;
                    for (int s : layer.source_layers)
                        parts.push_back(outputs[static_cast<std::size_t>(s)]);
                    int z;
                    if (parts.empty()) {
                        z = st.tape.add_bias(
                            st.tape.constant(Matrix(layer.weights.rows(), xb.cols())), b);
                    } else {
                        z = st.tape.add_bias(
                            st.tape.matmul(w, parts.size() == 1 ? parts[0] : st.tape.concat(parts)),
                            b);
                    }
                    const int h = layer.sigmoid_output ? st.tape.sigmoid(z) : st.tape.relu(z);
                    outputs[static_cast<std::size_t>(layer.depth)] = h;
                    prediction = h;
                }
                st.loss = st.tape.bce_loss(prediction, yb);
                st.built = true;
            } else {
                for (std::size_t l = 0; l < net.layers.size(); ++l) {
                    st.tape.set_value(st.weight_ids[l], net.layers[l].weights);
                    st.tape.set_value(st.bias_ids[l], net.layers[l].bias);
                }
                st.tape.recompute();
            }
            loss_sum += st.tape.value(st.loss)(0, 0);
            ++steps;
            st.tape.backward(st.loss);

            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                adadelta_step(net.layers[l].weights, st.tape.grad(st.weight_ids[l]),
                              net.layers[l].mask, weight_states[l], cfg.adadelta);
                adadelta_step(net.layers[l].bias, st.tape.grad(st.bias_ids[l]), bias_masks[l],
                              bias_states[l], cfg.adadelta);
            }
        }
        result.loss_history.push_back(loss_sum / steps);
        ++result.epochs_run;

        if (cfg.record_epoch_seconds) {
            const auto t1 = std::chrono::steady_clock::now();
            result.epoch_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        }

        if (cfg.early_stopping) {
            const double val_loss = bce_loss(forward(net, *x_val), *y_val);
            result.val_loss_history.push_back(val_loss);
            if (!has_best || val_loss < best_val) {
                best_val = val_loss;
                has_best = true;
                since_best = 0;
                best_params.clear();
                for (const auto& layer : net.layers) best_params.emplace_back(layer.weights, layer.bias);
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
    }

    if (cfg.early_stopping && has_best) {
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            net.layers[l].weights = best_params[l].first;
            net.layers[l].bias = best_params[l].second;
        }
    }
    result.final_loss = bce_loss(forward(net, x), y);
    return result;
}

} // namespace propneat
