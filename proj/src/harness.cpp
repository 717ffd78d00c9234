#include "propneat/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "propneat/compile.hpp"
#include "propneat/errors.hpp"

namespace propneat {

Genome make_family_genome(int total_layers, int param_target, int n_inputs, Rng& rng,
                          int width_override) {
    if (total_layers < 2) throw ConfigInvalid("family genome needs at least 2 layers");
    const int hidden_layers = total_layers - 2;

    // Smallest uniform width whose fully-connected parameter count reaches the
    // target; the connection budget then selects a subset of adjacent edges.
    auto node_count = [&](int w) { return n_inputs + hidden_layers * w + 1; };
    auto max_connections = [&](int w) {
        if (hidden_layers == 0) return n_inputs;
        return n_inputs * w + (hidden_layers - 1) * w * w + w;
    };
    int width = 1;
    if (width_override > 0) {
        width = width_override;
    } else {
        while (node_count(width) + max_connections(width) < param_target && width < 4096) ++width;
    }

    std::vector<std::vector<int>> layers; // node ids per layer
    Genome g;
    int next_id = 0;
    layers.emplace_back();
    for (int i = 0; i < n_inputs; ++i) {
        g.nodes.push_back({next_id, NodeKind::input, 0.0});
        layers.back().push_back(next_id++);
    }
    for (int l = 0; l < hidden_layers; ++l) {
        layers.emplace_back();
        for (int i = 0; i < width; ++i) {
            g.nodes.push_back({next_id, NodeKind::hidden, 0.0});
            layers.back().push_back(next_id++);
        }
    }
    layers.emplace_back();
    g.nodes.push_back({next_id, NodeKind::output, 0.0});
    layers.back().push_back(next_id++);

    // Spine: every node gets at least one inbound and one outbound edge, so
    // the whole graph is placed and no layer collapses.
    std::set<std::pair<int, int>> edges;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        const auto& a = layers[l];
        const auto& b = layers[l + 1];
        for (std::size_t j = 0; j < b.size(); ++j) edges.insert({a[j % a.size()], b[j]});
        for (std::size_t j = 0; j < a.size(); ++j) edges.insert({a[j], b[j % b.size()]});
    }
    const int budget = param_target - node_count(width);
    std::vector<std::pair<int, int>> extras;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l)
        for (int u : layers[l])
            for (int v : layers[l + 1])
                if (!edges.count({u, v})) extras.emplace_back(u, v);
    rng.shuffle(extras);
    for (const auto& e : extras) {
        if (static_cast<int>(edges.size()) >= budget) break;
        edges.insert(e);
    }

    for (const auto& [u, v] : edges)
        g.connections.push_back({0, u, v, rng.normal(0.0, 1.0), true});
    std::sort(g.connections.begin(), g.connections.end(),
              [](const ConnectionGene& a, const ConnectionGene& b) {
                  return std::make_pair(a.from, a.to) < std::make_pair(b.from, b.to);
              });
    for (auto& c : g.connections) c.id = next_id++;
    return g;
}

TimingCharacterization characterize_timing(const FamilySpec& spec) {
    TimingCharacterization out;
    Rng rng(spec.seed);

    struct Member {
        Genome genome;
        Matrix x, y;
    };
    std::vector<Member> members;
    for (const int depth : spec.depths) {
        Member m;
        m.genome = make_family_genome(depth, spec.param_target, spec.n_inputs, rng);
        m.x = Matrix(spec.n_inputs, spec.batch);
        m.y = Matrix(1, spec.batch);
        for (auto& v : m.x.values()) v = rng.uniform(-1.0, 1.0);
        for (int j = 0; j < spec.batch; ++j) m.y(0, j) = rng.uniform() < 0.5 ? 0.0 : 1.0;
        members.push_back(std::move(m));

        const ComplexityReport report = complexity(members.back().genome);
        TimingPoint point;
        point.depth = report.depth;
        point.size = report.parameter_size;
        point.width = report.width;
        out.points.push_back(std::move(point));
    }

    // Repeats are interleaved across family members so clock-frequency drift
    // and scheduler interference land on every depth equally.
    for (int rep = 0; rep < spec.repeats; ++rep) {
        for (std::size_t i = 0; i < members.size(); ++i) {
            CompiledNetwork net = compile(members[i].genome);
            TrainConfig cfg;
            cfg.epochs = spec.epochs;
            cfg.record_epoch_seconds = true;
            const TrainResult r = train(net, members[i].x, members[i].y, cfg);
            for (std::size_t e = static_cast<std::size_t>(spec.warmup_epochs);
                 e < r.epoch_seconds.size(); ++e)
                out.points[i].epoch_seconds.push_back(r.epoch_seconds[e]);
        }
    }
    for (auto& point : out.points) {
        std::vector<double> sorted = point.epoch_seconds;
        std::sort(sorted.begin(), sorted.end());
        point.median_epoch_seconds =
            sorted.empty() ? 0.0
                           : (sorted.size() % 2 ? sorted[sorted.size() / 2]
                                                : 0.5 * (sorted[sorted.size() / 2 - 1] +
                                                         sorted[sorted.size() / 2]));
    }

    std::vector<double> depths, sizes, widths, times;
    for (const auto& p : out.points) {
        depths.push_back(p.depth);
        sizes.push_back(p.size);
        widths.push_back(p.width);
        times.push_back(p.median_epoch_seconds);
    }
    out.pearson_depth = pearson(depths, times);
    out.pearson_size = pearson(sizes, times);
    out.pearson_width = pearson(widths, times);
    out.depth_fit = fit_line(depths, times);
    return out;
}

void write_plot_data(const TimingCharacterization& timing, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write plot data: " + path.string());
    out << "depth,size,width,time_per_epoch\n";
    char buf[128];
    for (const auto& p : timing.points) {
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.9g\n", p.depth, p.size, p.width,
                      p.median_epoch_seconds);
        out << buf;
    }
}

AblationResult run_ablation(const PreparedDataset& data, const EvolutionConfig& cfg, int jobs) {
    AblationResult result;
    {
        // Discarded warm-up pass so the first measured trainer does not pay
        // the clock ramp-up and cold-cache penalty.
        EvolutionConfig warm_cfg = cfg;
        warm_cfg.generations = 1;
        warm_cfg.population_size = std::min(cfg.population_size, 10);
        run_evolution(warm_cfg, data, TrainerKind::propneat, jobs);
        run_evolution(warm_cfg, data, TrainerKind::naive, jobs);
    }
    for (const TrainerKind trainer :
         {TrainerKind::propneat, TrainerKind::naive, TrainerKind::genetic}) {
        EvolutionConfig run_cfg = cfg;
        if (trainer == TrainerKind::genetic)
            run_cfg.generations = cfg.generations * cfg.epochs_per_generation;

        const auto t0 = std::chrono::steady_clock::now();
        const EvolutionHistory history = run_evolution(run_cfg, data, trainer, jobs);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const auto [x_test, y_test] = data.test_batch();
        AblationRow row;
        row.trainer = to_string(trainer);
        row.test_auc = auc(predict(history.best, x_test), y_test.values());
        row.wall_seconds = wall;
        row.generations_run = static_cast<int>(history.reports.size());
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::string format_table(const AblationResult& result) {
    std::ostringstream out;
    out << "trainer    test_auc  wall_seconds  generations\n";
    char buf[128];
    for (const auto& row : result.rows) {
        std::snprintf(buf, sizeof buf, "%-9s  %8.4f  %12.3f  %11d\n", row.trainer.c_str(),
                      row.test_auc, row.wall_seconds, row.generations_run);
        out << buf;
    }
    return out.str();
}

} // namespace propneat
