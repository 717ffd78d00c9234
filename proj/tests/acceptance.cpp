// Acceptance suite: one pass/fail line per criterion, exit 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>
#include <unistd.h>

#include "helpers.hpp"
#include "propneat/bench.hpp"
#include "propneat/compile.hpp"
#include "propneat/data.hpp"
#include "propneat/evolution.hpp"
#include "propneat/harness.hpp"
#include "propneat/naive.hpp"
#include "propneat/runio.hpp"

namespace fs = std::filesystem;
using namespace propneat;
using propneat::testing::make_skip_example_genome;
using propneat::testing::max_abs_diff;
using propneat::testing::random_batch;
using propneat::testing::random_dag_genome;

namespace {

struct Criterion {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) {
        detail += (detail.empty() ? "" : "; ") + what;
    }
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
    char buf[256];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Oracle equivalence: compiled forward vs per-node evaluation.
Criterion criterion_oracle_equivalence() {
    Criterion c;
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(1001);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Genome g = random_dag_genome(rng, 30, 80, 8);
        const CompiledNetwork net = compile(g);
        const Matrix x = random_batch(rng, net.input_dim(), 10);
        worst = std::max(worst, max_abs_diff(forward(net, x), evaluate_naive(g, x)));
    }
    const double elapsed = seconds_since(t0);
    c.require(worst < 1e-9, fmt("max |compiled - naive| = %.3e (limit 1e-9)", worst));
    c.require(elapsed < 60.0, fmt("runtime %.1fs exceeds 60s", elapsed));
    c.note(fmt("1000 genomes x 10 inputs, max diff %.2e, %.1fs", worst, elapsed));
    return c;
}

// ---------------------------------------------------------------------------
// 2. Worked-example golden test: shapes, zero slots, symbolic expansion.
Criterion criterion_golden_example() {
    Criterion c;
    Rng rng(1002);
    const Genome g = make_skip_example_genome(&rng);
    const CompiledNetwork net = compile(g);

    c.require(net.layers.size() == 3, "expected 3 weight tensors");
    const int shapes[3][2] = {{2, 3}, {3, 2}, {1, 5}};
    for (int l = 0; l < 3; ++l) {
        c.require(net.layers[static_cast<std::size_t>(l)].weights.rows() == shapes[l][0] &&
                      net.layers[static_cast<std::size_t>(l)].weights.cols() == shapes[l][1],
                  fmt("layer %d shape mismatch", l));
    }
    // Exact zero-slot sets per tensor.
    const std::vector<std::pair<int, int>> zeros0 = {{0, 2}};
    const std::vector<std::pair<int, int>> zeros1 = {{1, 1}, {2, 0}};
    const std::vector<std::pair<int, int>> zeros2 = {{0, 0}};
    const std::vector<std::vector<std::pair<int, int>>> zero_sets = {zeros0, zeros1, zeros2};
    for (int l = 0; l < 3; ++l) {
        const CompiledLayer& layer = net.layers[static_cast<std::size_t>(l)];
        for (int r = 0; r < layer.mask.rows(); ++r)
            for (int col = 0; col < layer.mask.cols(); ++col) {
                const bool should_be_zero =
                    std::find(zero_sets[static_cast<std::size_t>(l)].begin(),
                              zero_sets[static_cast<std::size_t>(l)].end(),
                              std::make_pair(r, col)) != zero_sets[static_cast<std::size_t>(l)].end();
                c.require(layer.mask(r, col) == (should_be_zero ? 0.0 : 1.0),
                          fmt("mask[%d](%d,%d) wrong", l, r, col));
                if (should_be_zero)
                    c.require(layer.weights(r, col) == 0.0, fmt("weight[%d](%d,%d) not 0", l, r, col));
            }
    }
    // Symbolic expansion O = f(sum w_Ok h_k) with the dead h1 slot.
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), cc = rng.uniform(-2, 2);
        auto w = [&](int from, int to) { return g.find_connection(from, to)->weight; };
        auto relu1 = [](double v) { return v > 0.0 ? v : 0.0; };
        const double h1 = relu1(w(0, 4) * a + w(1, 4) * b);
        const double h2 = relu1(w(0, 5) * a + w(1, 5) * b + w(2, 5) * cc);
        const double h3 = relu1(w(4, 6) * h1 + w(5, 6) * h2);
        const double h4 = relu1(w(4, 7) * h1);
        const double h5 = relu1(w(5, 8) * h2);
        const double z = 0.0 * h1 + w(5, 3) * h2 + w(6, 3) * h3 + w(7, 3) * h4 + w(8, 3) * h5;
        const double expanded = 1.0 / (1.0 + std::exp(-z));
        const double compiled = forward(net, Matrix::column({a, b, cc}))(0, 0);
        worst = std::max(worst, std::abs(expanded - compiled));
    }
    c.require(worst < 1e-12, fmt("symbolic expansion differs by %.2e", worst));
    c.note(fmt("shapes 2x3/3x2/1x5, 4 zero slots, expansion diff %.1e", worst));
    return c;
}

// ---------------------------------------------------------------------------
// 3. Roundtrip bijection through 50 optimizer steps.
Criterion criterion_roundtrip() {
    Criterion c;
    Rng rng(1003);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Genome g = random_dag_genome(rng, 20, 50, 6);
        CompiledNetwork net = compile(g);
        const int n = 16;
        const Matrix x = random_batch(rng, net.input_dim(), n);
        Matrix y(net.output_dim(), n);
        for (auto& v : y.values()) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        TrainConfig cfg;
        cfg.epochs = 50;
        train(net, x, y, cfg);

        for (const auto& layer : net.layers)
            for (std::size_t i = 0; i < layer.mask.size(); ++i)
                if (layer.mask.values()[i] == 0.0)
                    c.require(layer.weights.values()[i] == 0.0, "masked weight became nonzero");

        const Genome back = readback(net, g);
        const CompiledNetwork again = compile(back);
        const Matrix probe = random_batch(rng, net.input_dim(), 8);
        worst = std::max(worst, max_abs_diff(forward(net, probe), forward(again, probe)));
    }
    c.require(worst < 1e-12, fmt("recompiled forward differs by %.2e (limit 1e-12)", worst));
    c.note(fmt("20 genomes, 50 steps, recompiled diff %.1e", worst));
    return c;
}

// ---------------------------------------------------------------------------
// 4. Analytic gradients vs central finite differences.
Criterion criterion_gradients() {
    Criterion c;
    Rng rng(1004);
    int tested = 0;
    double worst_rel = 0.0;
    while (tested < 100) {
        const Genome g = random_dag_genome(rng, 12, 24, 4);
        CompiledNetwork net = compile(g);
        int params = 0;
        for (const auto& layer : net.layers)
            params += static_cast<int>(layer.weights.size() + layer.bias.size());
        if (params > 50) continue;
        ++tested;

        const int batch = 4;
        const Matrix x = random_batch(rng, net.input_dim(), batch);
        Matrix y(net.output_dim(), batch);
        for (auto& v : y.values()) v = rng.uniform() < 0.5 ? 0.0 : 1.0;

        Tape tape;
        std::vector<int> outputs(net.plan.layers.size(), -1);
        outputs[0] = tape.constant(x);
        std::vector<int> weight_ids, bias_ids;
        for (const auto& layer : net.layers) {
            const int w = tape.parameter(layer.weights);
            const int b = tape.parameter(layer.bias);
            weight_ids.push_back(w);
            bias_ids.push_back(b);
            std::vector<int> parts;
            for (int s : layer.source_layers) parts.push_back(outputs[static_cast<std::size_t>(s)]);
            const int z =
                parts.empty()
                    ? tape.add_bias(tape.constant(Matrix(layer.weights.rows(), batch)), b)
                    : tape.add_bias(
                          tape.matmul(w, parts.size() == 1 ? parts[0] : tape.concat(parts)), b);
            outputs[static_cast<std::size_t>(layer.depth)] =
                layer.sigmoid_output ? tape.sigmoid(z) : tape.relu(z);
        }
        tape.backward(tape.bce_loss(outputs.back(), y));

        const double step = 1e-5;
        auto loss_now = [&] { return bce_loss(forward(net, x), y); };
        auto check = [&](Matrix& host, const Matrix& grads) {
            for (std::size_t i = 0; i < host.size(); ++i) {
                const double keep = host.values()[i];
                host.values()[i] = keep + step;
                const double up = loss_now();
                host.values()[i] = keep - step;
                const double down = loss_now();
                host.values()[i] = keep;
                const double fd = (up - down) / (2.0 * step);
                const double analytic = grads.values()[i];
                const double denom = std::max({1e-2, std::abs(fd), std::abs(analytic)});
                worst_rel = std::max(worst_rel, std::abs(analytic - fd) / denom);
            }
        };
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            check(net.layers[l].weights, tape.grad(weight_ids[l]));
            check(net.layers[l].bias, tape.grad(bias_ids[l]));
        }
    }
    c.require(worst_rel < 1e-4, fmt("worst relative gradient error %.2e (limit 1e-4)", worst_rel));
    c.note(fmt("100 networks <= 50 params, worst rel err %.1e", worst_rel));
    return c;
}

// ---------------------------------------------------------------------------
// 5. Naive and compiled trainers produce the same weights after 10 epochs.
Criterion criterion_trajectory() {
    Criterion c;
    Rng rng(1005);
    const Genome g = make_skip_example_genome(&rng);

    Matrix x = random_batch(rng, 3, 50);
    Matrix y(1, 50);
    for (int j = 0; j < 50; ++j) y(0, j) = x(0, j) * x(1, j) + 0.3 * x(2, j) > 0 ? 1.0 : 0.0;

    TrainConfig cfg;
    cfg.epochs = 10;
    CompiledNetwork net = compile(g);
    train(net, x, y, cfg);
    const Genome compiled_after = readback(net, g);
    const NaiveTrainResult naive_after = train_naive(g, x, y, cfg);

    double worst = 0.0;
    for (std::size_t i = 0; i < g.connections.size(); ++i)
        worst = std::max(worst, std::abs(naive_after.genome.connections[i].weight -
                                         compiled_after.connections[i].weight));
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        worst = std::max(worst, std::abs(naive_after.genome.nodes[i].bias -
                                         compiled_after.nodes[i].bias));
    c.require(worst < 1e-7, fmt("weight trajectories differ by %.2e (limit 1e-7)", worst));
    c.note(fmt("50-row set, 10 epochs, max weight gap %.1e", worst));
    return c;
}

// ---------------------------------------------------------------------------
// 6. Time per epoch scales linearly with depth at fixed parameter count.
Criterion criterion_depth_scaling() {
    Criterion c;
    const auto t0 = std::chrono::steady_clock::now();
    FamilySpec spec;
    spec.depths = {3, 6, 12, 24};
    spec.param_target = 200;
    spec.batch = 32;
    spec.epochs = 14;
    spec.repeats = 9;
    spec.warmup_epochs = 2;
    spec.seed = 1006;
    const TimingCharacterization timing = characterize_timing(spec);
    const double elapsed = seconds_since(t0);

    for (const auto& p : timing.points)
        c.require(p.size == 200, fmt("depth %d has %d params, expected 200", p.depth, p.size));
    c.require(timing.pearson_depth >= 0.95,
              fmt("pearson(time, depth) = %.4f < 0.95", timing.pearson_depth));
    c.require(timing.depth_fit.max_relative_residual < 0.15,
              fmt("linear fit residual %.1f%% >= 15%%",
                  100.0 * timing.depth_fit.max_relative_residual));
    c.require(elapsed < 600.0, fmt("runtime %.1fs exceeds 600s", elapsed));
    std::string medians;
    for (const auto& p : timing.points) medians += fmt(" d%d=%.0fus", p.depth, 1e6 * p.median_epoch_seconds);
    c.note(fmt("pearson %.4f, max residual %.1f%%,%s, %.1fs", timing.pearson_depth,
               100.0 * timing.depth_fit.max_relative_residual, medians.c_str(), elapsed));
    return c;
}

// ---------------------------------------------------------------------------
// 7. Ablation direction at desk scale on the XOR-Gaussian set.
Criterion criterion_ablation() {
    Criterion c;
    const auto t0 = std::chrono::steady_clock::now();
    const PreparedDataset data = prepare(make_xor_gaussians(1000, 1007), 1007);
    EvolutionConfig cfg;
    cfg.population_size = 50;
    cfg.generations = 10;
    cfg.epochs_per_generation = 10;
    cfg.seed = 1007;
    const AblationResult result = run_ablation(data, cfg);
    const double elapsed = seconds_since(t0);

    const AblationRow& pn = result.rows[0];
    const AblationRow& nv = result.rows[1];
    const AblationRow& ga = result.rows[2];
    c.require(pn.wall_seconds < nv.wall_seconds,
              fmt("propneat %.2fs not faster than naive %.2fs", pn.wall_seconds, nv.wall_seconds));
    c.require(std::min(pn.test_auc, nv.test_auc) >= ga.test_auc + 0.1,
              fmt("backprop AUC (%.3f/%.3f) does not beat genetic %.3f by 0.1", pn.test_auc,
                  nv.test_auc, ga.test_auc));
    c.require(std::abs(pn.test_auc - nv.test_auc) < 0.05,
              fmt("|propneat %.3f - naive %.3f| >= 0.05", pn.test_auc, nv.test_auc));
    c.require(elapsed < 1800.0, fmt("runtime %.1fs exceeds 1800s", elapsed));
    c.note(fmt("auc pn=%.3f nv=%.3f ga=%.3f; wall pn=%.1fs nv=%.1fs ga=%.1fs; %.0fs total",
               pn.test_auc, nv.test_auc, ga.test_auc, pn.wall_seconds, nv.wall_seconds,
               ga.wall_seconds, elapsed));
    return c;
}

// ---------------------------------------------------------------------------
// 8. Skippiness anchors.
Criterion criterion_skippiness() {
    Criterion c;
    Rng rng(1008);
    const Genome chain = make_family_genome(6, 120, 4, rng);
    c.require(complexity(chain).skippiness == 0.0, "layer-adjacent genome not 0");

    // Every layer feeds the next and one extra layer deep with equal counts.
    Genome half;
    half.nodes = {{0, NodeKind::input, 0.0},  {1, NodeKind::input, 0.0},
                  {2, NodeKind::output, 0.0}, {3, NodeKind::hidden, 0.0},
                  {4, NodeKind::hidden, 0.0}, {5, NodeKind::hidden, 0.0},
                  {6, NodeKind::hidden, 0.0}};
    int id = 10;
    for (const auto& [u, v] : std::vector<std::pair<int, int>>{
             {0, 3}, {1, 4}, {3, 5}, {4, 6}, {5, 2}, {6, 2},          // adjacent
             {0, 5}, {1, 6}, {0, 6}, {1, 5}, {3, 2}, {4, 2}})         // one layer deeper
        half.connections.push_back({id++, u, v, 0.5, true});
    const double s = complexity(half).skippiness;
    c.require(std::abs(s - 0.5) <= 1e-12, fmt("half construction gives %.15f", s));

    const double example = complexity(make_skip_example_genome()).skippiness;
    c.require(std::abs(example - 1.0 / 13.0) <= 1e-12,
              fmt("reference genome gives %.15f, want 1/13", example));
    c.note(fmt("anchors 0 / 0.5 / %.6f", example));
    return c;
}

// ---------------------------------------------------------------------------
// 9. Determinism of results files and the seed+i iteration rule.
Criterion criterion_determinism() {
    Criterion c;
    const fs::path base =
        fs::temp_directory_path() / ("propneat-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(base);
    fs::create_directories(base);

    const RawDataset raw = make_xor_gaussians(200, 1009);
    const PreparedDataset data = prepare(raw, 1009);
    EvolutionConfig cfg;
    cfg.population_size = 10;
    cfg.generations = 3;
    cfg.epochs_per_generation = 5;
    cfg.seed = 1009;

    auto run_to_dir = [&](const fs::path& dir, std::uint64_t seed) {
        EvolutionConfig run_cfg = cfg;
        run_cfg.seed = seed;
        PreparedDataset fresh = data;
        const EvolutionHistory history = run_evolution(run_cfg, fresh, TrainerKind::propneat);
        const auto [x_test, y_test] = fresh.test_batch();
        RunPayload payload;
        payload.config = {{"seed", std::to_string(seed)}, {"trainer", "propneat"}};
        payload.history = history;
        payload.test_scores = predict(history.best, x_test);
        payload.test_labels = y_test.values();
        payload.test_auc = auc(payload.test_scores, payload.test_labels);
        payload.trainer = "propneat";
        payload.seed = seed;
        write_run_directory(dir, payload);
    };
    run_to_dir(base / "a", cfg.seed);
    run_to_dir(base / "b", cfg.seed);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    for (const std::string& name : deterministic_run_files())
        c.require(slurp(base / "a" / name) == slurp(base / "b" / name),
                  "file differs between identical runs: " + name);

    // Iteration i uses seed+i.
    const std::vector<EvolutionHistory> iterations =
        run_iterations(cfg, data, TrainerKind::propneat, 2);
    EvolutionConfig shifted = cfg;
    shifted.seed = cfg.seed + 1;
    const EvolutionHistory direct = run_evolution(shifted, data, TrainerKind::propneat);
    c.require(to_text(iterations[1].best) == to_text(direct.best),
              "iteration 1 does not reproduce seed+1");
    c.require(iterations[1].best_fitness == direct.best_fitness,
              "iteration 1 fitness differs from seed+1 run");
    c.require(to_text(iterations[0].best) != to_text(iterations[1].best) ||
                  iterations[0].best_fitness != iterations[1].best_fitness,
              "seed and seed+1 runs are unexpectedly identical");
    fs::remove_all(base);
    c.note("byte-identical results files; iteration i == run with seed+i");
    return c;
}

// ---------------------------------------------------------------------------
// 10. End-to-end sanity on a credit-approval style CSV, plus dense retrain.
Criterion criterion_end_to_end() {
    Criterion c;
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path base =
        fs::temp_directory_path() / ("propneat-e2e-" + std::to_string(::getpid()));
    fs::remove_all(base);
    fs::create_directories(base);

    // Through the full file path: write the table, then load CSV + schema.
    const RawDataset raw = make_credit_like(650, 1010);
    write_csv(raw, base / "credit.csv");
    {
        std::ofstream out(base / "credit.schema");
        out << schema_of(raw).to_text();
    }
    const Schema schema = Schema::load(base / "credit.schema");
    const RawDataset loaded = load_csv(base / "credit.csv", schema);
    PreparedDataset data = prepare(loaded, 1010);

    EvolutionConfig cfg;
    cfg.population_size = 50;
    cfg.generations = 20;
    cfg.epochs_per_generation = 10;
    cfg.seed = 1010;
    const EvolutionHistory history = run_evolution(cfg, data, TrainerKind::propneat);

    c.require(!data.test_accessed(), "test partition touched before the prediction step");
    const auto [x_test, y_test] = data.test_batch();
    const double test_auc = auc(predict(history.best, x_test), y_test.values());
    c.require(test_auc >= 0.85, fmt("test AUC %.4f < 0.85", test_auc));
    // A constant predictor scores 0.5 by the tie rule.
    const double constant_auc =
        auc(std::vector<double>(y_test.values().size(), 0.5), y_test.values());
    c.require(test_auc > constant_auc, "does not beat a constant predictor");

    // Dense retrain of the minimal covering network, early stopping on the
    // same validation split.
    const CompiledNetwork source = compile(history.best);
    Rng rng(1010);
    MinimalCoveringNetwork dense = minimal_covering(source, rng);
    const auto [x_train, y_train] = data.train_batch();
    const auto [x_val, y_val] = data.validation_batch();
    TrainConfig retrain_cfg;
    retrain_cfg.epochs = 2000;
    retrain_cfg.early_stopping = true;
    retrain_cfg.patience = 50;
    const TrainResult retrain = train(dense.network, x_train, y_train, retrain_cfg, &x_val, &y_val);
    const double retrain_auc = auc(forward(dense.network, x_test).values(), y_test.values());
    c.require(std::abs(retrain_auc - test_auc) <= 0.1,
              fmt("retrain AUC %.4f not within 0.1 of source %.4f", retrain_auc, test_auc));

    const double elapsed = seconds_since(t0);
    c.require(elapsed < 1800.0, fmt("runtime %.1fs exceeds 1800s", elapsed));
    c.note(fmt("test AUC %.3f, retrain %.3f (%d epochs), %.0fs", test_auc, retrain_auc,
               retrain.epochs_run, elapsed));
    fs::remove_all(base);
    return c;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Criterion()>>> criteria = {
        {"1 oracle equivalence (compiled == naive, 1000 genomes, <1e-9)", criterion_oracle_equivalence},
        {"2 golden worked example (shapes, zero slots, expansion)", criterion_golden_example},
        {"3 roundtrip bijection (50 steps, readback, recompile, <1e-12)", criterion_roundtrip},
        {"4 gradient correctness (central differences, rel err <1e-4)", criterion_gradients},
        {"5 trajectory equivalence (naive vs compiled, 10 epochs, <1e-7)", criterion_trajectory},
        {"6 depth scaling (fixed ~200 params, pearson >= 0.95)", criterion_depth_scaling},
        {"7 ablation direction (time and AUC ordering)", criterion_ablation},
        {"8 skippiness anchors (0, 0.5, 1/13)", criterion_skippiness},
        {"9 determinism (byte-identical files, seed+i iterations)", criterion_determinism},
        {"10 end-to-end sanity (credit-style CSV, AUC >= 0.85, retrain)", criterion_end_to_end},
    };

    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        // Optional filter: run only the criteria whose number is listed.
        if (argc > 1) {
            bool wanted = false;
            const std::string number = name.substr(0, name.find(' '));
            for (int i = 1; i < argc; ++i)
                if (number == argv[i]) wanted = true;
            if (!wanted) continue;
        }
        Criterion result;
        try {
            result = fn();
        } catch (const std::exception& e) {
            result.pass = false;
            result.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %s%s%s\n", result.pass ? "PASS" : "FAIL", name.c_str(),
                    result.detail.empty() ? "" : " -- ", result.detail.c_str());
        std::fflush(stdout);
        if (!result.pass) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all criteria passed\n");
    return failures == 0 ? 0 : 1;
}
