#pragma once

#include <vector>

#include "propneat/compile.hpp"
#include "propneat/genome.hpp"
#include "propneat/tensor.hpp"

namespace propneat {

// Topological node order over enabled connections, smallest node id first
// among ready nodes. Throws CycleDetected.
std::vector<int> node_schedule(const Genome& g);

// Per-node reference evaluation: out[node] = activation(bias + sum(inputs)),
// hidden ReLU, output sigmoid. Nodes with no path from an input never
// produce a value; consumers read their contribution as zero. X is
// input_count x n with input rows in ascending gene-id order; the result is
// output_count x n, ascending gene-id order.
Matrix evaluate_naive(const Genome& g, const Matrix& x);
std::vector<double> evaluate_naive(const Genome& g, const std::vector<double>& input);

struct NaiveTrainResult {
    Genome genome;
    std::vector<double> loss_history;
    double final_loss = 0.0;
};

// Per-node forward and reverse-order gradient accumulation with per-gene
// Adadelta state. Only genes between nodes reachable in both directions
// carry gradient; everything else is untouched. Throws UntrainableGenome.
NaiveTrainResult train_naive(const Genome& g, const Matrix& x, const Matrix& y,
                             const TrainConfig& cfg);

} // namespace propneat
