#include "propneat/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "propneat/errors.hpp"
#include "propneat/graph.hpp"

namespace propneat {

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size())
        throw DimensionMismatch("auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t positives = 0;
    for (double l : labels) positives += l > 0.5 ? 1 : 0;
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0)
        throw SingleClass("auc requires both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks over tied scores, then the rank-sum statistic.
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double rank_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (labels[k] > 0.5) rank_sum += rank[k];
    const double u = rank_sum - 0.5 * static_cast<double>(positives) * (positives + 1);
    return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

ComplexityReport complexity(const Genome& g) {
    const GraphAnalysis analysis = analyze(g);
    const LayerPlan plan = build_layer_plan(analysis);

    ComplexityReport report;
    report.depth = static_cast<int>(plan.layers.size());
    for (const auto& layer : plan.layers) {
        report.placed_nodes += layer.output_dim;
        report.width = std::max(report.width, layer.output_dim);
    }
    int skipped_total = 0;
    for (const auto& c : g.connections) {
        if (!c.enabled) continue;
        auto from = plan.node_slot.find(c.from);
        auto to = plan.node_slot.find(c.to);
        if (from == plan.node_slot.end() || to == plan.node_slot.end()) continue;
        ++report.placed_connections;
        skipped_total += to->second.layer - from->second.layer - 1;
    }
    report.parameter_size = report.placed_nodes + report.placed_connections;
    report.average_width = static_cast<double>(report.placed_nodes) / report.depth;
    report.skippiness = report.placed_connections > 0
                            ? static_cast<double>(skipped_total) / report.placed_connections
                            : 0.0;
    return report;
}

namespace {

// rank 1 = best value, ties get the midrank.
std::vector<double> rank_descending(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    return rank;
}

} // namespace

RunSummary summarize_runs(const std::vector<RunObservation>& observations) {
    if (observations.empty()) return {};

    // Preserve first-appearance order for datasets and methods.
    std::vector<std::string> datasets, methods;
    for (const auto& o : observations) {
        if (std::find(datasets.begin(), datasets.end(), o.dataset) == datasets.end())
            datasets.push_back(o.dataset);
        if (std::find(methods.begin(), methods.end(), o.method) == methods.end())
            methods.push_back(o.method);
    }

    RunSummary summary;
    std::map<std::string, std::vector<double>> ranks_by_method;
    std::map<std::string, std::vector<double>> aucs_by_method;

    for (const auto& dataset : datasets) {
        std::vector<DatasetMethodStats> rows;
        std::vector<double> means;
        for (const auto& method : methods) {
            std::vector<double> values;
            for (const auto& o : observations)
                if (o.dataset == dataset && o.method == method) values.push_back(o.auc_value);
            if (values.empty()) continue;
            DatasetMethodStats stats;
            stats.dataset = dataset;
            stats.method = method;
            stats.runs = static_cast<int>(values.size());
            stats.max_auc = *std::max_element(values.begin(), values.end());
            stats.mean_auc = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
            double var = 0.0;
            for (double v : values) var += (v - stats.mean_auc) * (v - stats.mean_auc);
            stats.stddev_auc = values.size() > 1 ? std::sqrt(var / (values.size() - 1)) : 0.0;
            rows.push_back(stats);
            means.push_back(stats.mean_auc);
        }
        const std::vector<double> ranks = rank_descending(means);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].rank = ranks[i];
            ranks_by_method[rows[i].method].push_back(ranks[i]);
            aucs_by_method[rows[i].method].push_back(rows[i].mean_auc);
            summary.per_dataset.push_back(rows[i]);
        }
    }
    for (const auto& method : methods) {
        const auto& ranks = ranks_by_method[method];
        if (ranks.empty()) continue;
        MethodRank mr;
        mr.method = method;
        mr.mean_rank = std::accumulate(ranks.begin(), ranks.end(), 0.0) / ranks.size();
        const auto& aucs = aucs_by_method[method];
        mr.mean_auc = std::accumulate(aucs.begin(), aucs.end(), 0.0) / aucs.size();
        summary.method_ranks.push_back(mr);
    }
    return summary;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LinearFit fit;
    const std::size_t n = std::min(x.size(), y.size());
    if (n == 0) return fit;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < n; ++i) {
        const double fitted = fit.intercept + fit.slope * x[i];
        if (fitted != 0.0)
            fit.max_relative_residual =
                std::max(fit.max_relative_residual, std::abs(y[i] - fitted) / std::abs(fitted));
    }
    return fit;
}

} // namespace propneat
