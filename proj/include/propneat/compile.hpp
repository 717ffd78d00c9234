#pragma once

#include <string>
#include <vector>

#include "propneat/genome.hpp"
#include "propneat/graph.hpp"
#include "propneat/tensor.hpp"

namespace propneat {

// One connected layer of the compiled network. Row order is the layer's node
// order; column order follows the concatenated source layers.
struct CompiledLayer {
    int depth = 0;
    Matrix weights; // output_dim x input_dim
    Matrix mask;    // 1 where a genome connection exists, 0 elsewhere
    Matrix bias;    // output_dim x 1
    std::vector<int> source_layers;
    std::vector<int> source_offsets;
    bool sigmoid_output = false;
};

struct CompiledNetwork {
    LayerPlan plan;
    std::vector<CompiledLayer> layers; // layers[d-1] computes plan layer d
    bool genome_mapped = true;         // false once the bijection is severed

    int input_dim() const { return plan.layers.front().output_dim; }
    int output_dim() const { return plan.layers.back().output_dim; }
};

// Weight tensors start as zeros and are overwritten gene by gene; the mask
// marks exactly the gene positions. Throws UntrainableGenome via the plan.
CompiledNetwork compile(const Genome& g);

// batch: input_dim x n, columns are samples. Returns output_dim x n.
Matrix forward(const CompiledNetwork& net, const Matrix& batch);

// Copies trained tensor entries back into the matching genes; genes for
// unplaced nodes are left untouched. Throws MapMismatch when the network has
// no genome mapping or a gene does not land on a masked-in position.
Genome readback(const CompiledNetwork& net, const Genome& g);

// Same shapes with all-ones masks, Kaiming-normal weights, zero biases.
// The genome bijection is severed: readback on the result throws.
struct MinimalCoveringNetwork {
    CompiledNetwork network;
};
MinimalCoveringNetwork minimal_covering(const CompiledNetwork& net, Rng& rng);

double kaiming_stddev(int fan_in);

std::string describe(const CompiledNetwork& net);

struct TrainConfig {
    int epochs = 25;
    int batch_size = 0; // 0 = full batch; otherwise contiguous slices in order
    AdadeltaConfig adadelta;
    bool early_stopping = false;
    int patience = 25;
    bool record_epoch_seconds = false;
};

struct TrainResult {
    std::vector<double> loss_history; // training loss at the start of each epoch
    double final_loss = 0.0;          // loss of the final weights
    int epochs_run = 0;
    std::vector<double> val_loss_history;
    std::vector<double> epoch_seconds; // filled when record_epoch_seconds
};

// Full-batch Adadelta training of a compiled network in place. X is
// input_dim x n, y is output_dim x n. When early stopping is enabled the
// validation set is required and the best-validation weights are restored.
TrainResult train(CompiledNetwork& net, const Matrix& x, const Matrix& y,
                  const TrainConfig& cfg, const Matrix* x_val = nullptr,
                  const Matrix* y_val = nullptr);

} // namespace propneat
