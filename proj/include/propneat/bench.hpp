#pragma once

#include <string>
#include <vector>

#include "propneat/genome.hpp"

namespace propneat {

// Mann-Whitney AUC by rank sum with midrank tie handling.
// Throws SingleClass unless both classes are present.
double auc(const std::vector<double>& scores, const std::vector<double>& labels);

struct ComplexityReport {
    int parameter_size = 0; // placed nodes + placed enabled connections
    int depth = 0;          // layer count including input and output
    int width = 0;          // max layer width
    double average_width = 0.0;
    double skippiness = 0.0; // mean (layer gap - 1) over placed connections
    int placed_nodes = 0;
    int placed_connections = 0;
};

// Metrics over the placed (reachable) subgraph. Throws UntrainableGenome.
ComplexityReport complexity(const Genome& g);

// One observation for summaries: a method's test AUC on one dataset run.
struct RunObservation {
    std::string dataset;
    std::string method;
    double auc_value = 0.0;
};

struct DatasetMethodStats {
    std::string dataset;
    std::string method;
    int runs = 0;
    double max_auc = 0.0;
    double mean_auc = 0.0;
    double stddev_auc = 0.0;
    double rank = 0.0; // per-dataset rank of mean AUC, 1 = best, midrank ties
};

struct MethodRank {
    std::string method;
    double mean_rank = 0.0;
    double mean_auc = 0.0;
};

struct RunSummary {
    std::vector<DatasetMethodStats> per_dataset; // dataset-major, method order preserved
    std::vector<MethodRank> method_ranks;
};

RunSummary summarize_runs(const std::vector<RunObservation>& observations);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double max_relative_residual = 0.0; // |residual| / fitted value, worst point
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

} // namespace propneat
