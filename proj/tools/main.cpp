#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "propneat/bench.hpp"
#include "propneat/compile.hpp"
#include "propneat/data.hpp"
#include "propneat/errors.hpp"
#include "propneat/evolution.hpp"
#include "propneat/harness.hpp"
#include "propneat/runio.hpp"

namespace fs = std::filesystem;
using namespace propneat;

namespace {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct RunOptions {
    std::string config_path;
    std::string dataset;
    std::string schema;
    std::string out_dir;
    std::string trainer = "propneat";
    std::uint64_t seed = 1;
    int generations = 500;
    int population = 500;
    int epochs = 25;
    int iterations = 1;
    int jobs = 1;
    int batch = 16;
    EvolutionConfig defaults; // mutation probabilities and speciation knobs
};

void add_run_flags(CLI::App* cmd, RunOptions& opt, bool needs_out) {
    cmd->add_option("--config", opt.config_path, "key=value config file; flags override");
    cmd->add_option("--dataset", opt.dataset, "CSV file with a header row");
    cmd->add_option("--schema", opt.schema, "schema file mapping column -> kind");
    if (needs_out) cmd->add_option("--out", opt.out_dir, "run directory (must not exist)");
    cmd->add_option("--seed", opt.seed, "experiment seed");
    cmd->add_option("--generations", opt.generations, "generations to run");
    cmd->add_option("--population", opt.population, "population size");
    cmd->add_option("--epochs", opt.epochs, "epochs per generation");
    cmd->add_option("--batch", opt.batch, "trainer mini-batch size, 0 = full batch");
    cmd->add_option("--jobs", opt.jobs, "worker threads for per-genome training");
    cmd->add_option("--p-add-connection", opt.defaults.p_add_connection, "");
    cmd->add_option("--p-remove-connection", opt.defaults.p_remove_connection, "");
    cmd->add_option("--p-add-node", opt.defaults.p_add_node, "");
    cmd->add_option("--p-remove-node", opt.defaults.p_remove_node, "");
    cmd->add_option("--p-reinit-weights", opt.defaults.p_reinit_weights, "");
    cmd->add_option("--compat-threshold", opt.defaults.compatibility_threshold, "");
    cmd->add_option("--elimination-fraction", opt.defaults.elimination_fraction, "");
}

// Key=value config: any value a flag also covers; explicit flags win.
void apply_config_file(CLI::App* cmd, RunOptions& opt, bool needs_out) {
    if (!opt.config_path.empty()) {
        if (!fs::exists(opt.config_path))
            throw ConfigInvalid("config file does not exist: " + opt.config_path);
        for (const auto& [key, value] : read_config(opt.config_path)) {
            const std::string flag = "--" + key;
            const CLI::Option* known = cmd->get_option_no_throw(flag);
            if (!known) throw ConfigInvalid("unknown config key: " + key);
            if (known->count() > 0) continue; // command line overrides
            auto parse_int = [&](int& target) { target = std::stoi(value); };
            if (key == "dataset") opt.dataset = value;
            else if (key == "schema") opt.schema = value;
            else if (key == "out") opt.out_dir = value;
            else if (key == "trainer") opt.trainer = value;
            else if (key == "seed") opt.seed = std::stoull(value);
            else if (key == "generations") parse_int(opt.generations);
            else if (key == "population") parse_int(opt.population);
            else if (key == "epochs") parse_int(opt.epochs);
            else if (key == "iterations") parse_int(opt.iterations);
            else if (key == "jobs") parse_int(opt.jobs);
            else if (key == "batch") parse_int(opt.batch);
            else if (key == "p-add-connection") opt.defaults.p_add_connection = std::stod(value);
            else if (key == "p-remove-connection") opt.defaults.p_remove_connection = std::stod(value);
            else if (key == "p-add-node") opt.defaults.p_add_node = std::stod(value);
            else if (key == "p-remove-node") opt.defaults.p_remove_node = std::stod(value);
            else if (key == "p-reinit-weights") opt.defaults.p_reinit_weights = std::stod(value);
            else if (key == "compat-threshold") opt.defaults.compatibility_threshold = std::stod(value);
            else if (key == "elimination-fraction") opt.defaults.elimination_fraction = std::stod(value);
            else throw ConfigInvalid("config key has no handler: " + key);
        }
    }
    if (opt.dataset.empty()) throw ConfigInvalid("--dataset is required");
    if (opt.schema.empty()) throw ConfigInvalid("--schema is required");
    if (needs_out && opt.out_dir.empty()) throw ConfigInvalid("--out is required");
}

EvolutionConfig to_evolution_config(const RunOptions& opt) {
    EvolutionConfig cfg = opt.defaults;
    cfg.population_size = opt.population;
    cfg.generations = opt.generations;
    cfg.epochs_per_generation = opt.epochs;
    cfg.batch_size = opt.batch;
    cfg.seed = opt.seed;
    return cfg;
}

std::map<std::string, std::string> config_snapshot(const RunOptions& opt, std::uint64_t seed) {
    return {
        {"dataset", opt.dataset},
        {"schema", opt.schema},
        {"trainer", opt.trainer},
        {"seed", std::to_string(seed)},
        {"generations", std::to_string(opt.generations)},
        {"population", std::to_string(opt.population)},
        {"epochs", std::to_string(opt.epochs)},
        {"batch", std::to_string(opt.batch)},
        {"p-add-connection", std::to_string(opt.defaults.p_add_connection)},
        {"p-remove-connection", std::to_string(opt.defaults.p_remove_connection)},
        {"p-add-node", std::to_string(opt.defaults.p_add_node)},
        {"p-remove-node", std::to_string(opt.defaults.p_remove_node)},
        {"p-reinit-weights", std::to_string(opt.defaults.p_reinit_weights)},
    };
}

PreparedDataset load_and_prepare(const RunOptions& opt) {
    if (!fs::exists(opt.dataset))
        throw ParseError("dataset file does not exist: " + opt.dataset);
    if (!fs::exists(opt.schema))
        throw ParseError("schema file does not exist: " + opt.schema);
    const Schema schema = Schema::load(opt.schema);
    return prepare(load_csv(opt.dataset, schema), opt.seed);
}

int cmd_evolve(const RunOptions& opt) {
    const PreparedDataset data = load_and_prepare(opt);
    const TrainerKind trainer = trainer_from_string(opt.trainer);

    for (int i = 0; i < opt.iterations; ++i) {
        EvolutionConfig cfg = to_evolution_config(opt);
        cfg.seed = opt.seed + static_cast<std::uint64_t>(i);
        PreparedDataset run_data = data; // fresh audit flag per iteration
        const EvolutionHistory history = run_evolution(cfg, run_data, trainer, opt.jobs);

        if (run_data.test_accessed()) {
            std::cerr << "internal error: test partition touched before prediction step\n";
            return kExitRuntime;
        }
        const auto [x_test, y_test] = run_data.test_batch();
        RunPayload payload;
        payload.config = config_snapshot(opt, cfg.seed);
        payload.history = history;
        payload.test_scores = predict(history.best, x_test);
        payload.test_labels = y_test.values();
        payload.test_auc = auc(payload.test_scores, payload.test_labels);
        payload.trainer = opt.trainer;
        payload.seed = cfg.seed;

        const fs::path dir =
            opt.iterations == 1 ? fs::path(opt.out_dir)
                                : fs::path(opt.out_dir) / ("iter_" + std::to_string(i));
        write_run_directory(dir, payload);
        std::printf("iteration %d: best_fitness=%.4f (generation %d) test_auc=%.4f -> %s\n", i,
                    history.best_fitness, history.best_generation, payload.test_auc,
                    dir.string().c_str());
    }
    return kExitOk;
}

int cmd_retrain(const RunOptions& opt, const std::string& genome_path, int max_epochs,
                int patience, int batch_size, const std::string& out_file) {
    if (!fs::exists(genome_path))
        throw ParseError("genome file does not exist: " + genome_path);
    const Genome best = load_genome(genome_path);
    const PreparedDataset data = load_and_prepare(opt);

    const CompiledNetwork source = compile(best);
    Rng rng(opt.seed);
    MinimalCoveringNetwork dense = minimal_covering(source, rng);

    const auto [x_train, y_train] = data.train_batch();
    const auto [x_val, y_val] = data.validation_batch();
    TrainConfig cfg;
    cfg.epochs = max_epochs;
    cfg.batch_size = batch_size;
    cfg.early_stopping = true;
    cfg.patience = patience;
    const TrainResult result = train(dense.network, x_train, y_train, cfg, &x_val, &y_val);

    if (data.test_accessed()) {
        std::cerr << "internal error: test partition touched before prediction step\n";
        return kExitRuntime;
    }
    const auto [x_test, y_test] = data.test_batch();
    const std::vector<double> scores = forward(dense.network, x_test).values();
    const double test_auc = auc(scores, y_test.values());
    const double source_auc = auc(predict(best, x_test), y_test.values());

    std::printf("retrain: epochs_run=%d final_train_loss=%.6f test_auc=%.4f source_test_auc=%.4f\n",
                result.epochs_run, result.final_loss, test_auc, source_auc);
    if (!out_file.empty()) {
        std::ofstream out(out_file);
        out << "index,label,score\n";
        char buf[96];
        for (std::size_t i = 0; i < scores.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%g,%.17g\n", i, y_test.values()[i], scores[i]);
            out << buf;
        }
    }
    return kExitOk;
}

int cmd_ablate(const RunOptions& opt, const std::string& out_file) {
    const PreparedDataset data = load_and_prepare(opt);
    const AblationResult result = run_ablation(data, to_evolution_config(opt), opt.jobs);
    const std::string table = format_table(result);
    std::fputs(table.c_str(), stdout);
    if (!out_file.empty()) {
        std::ofstream out(out_file);
        out << table;
    }
    return kExitOk;
}

int cmd_bench_timing(const FamilySpec& spec, const std::string& out_file) {
    const TimingCharacterization timing = characterize_timing(spec);
    std::printf("depth  size  width  median_epoch_seconds\n");
    for (const auto& p : timing.points)
        std::printf("%5d  %4d  %5d  %.6f\n", p.depth, p.size, p.width, p.median_epoch_seconds);
    std::printf("pearson(time, depth)=%.4f pearson(time, size)=%.4f pearson(time, width)=%.4f\n",
                timing.pearson_depth, timing.pearson_size, timing.pearson_width);
    std::printf("fit: time = %.3e + %.3e * depth (max relative residual %.1f%%)\n",
                timing.depth_fit.intercept, timing.depth_fit.slope,
                100.0 * timing.depth_fit.max_relative_residual);
    if (!out_file.empty()) write_plot_data(timing, out_file);
    return kExitOk;
}

int cmd_inspect(const std::string& genome_path) {
    if (!fs::exists(genome_path))
        throw ParseError("genome file does not exist: " + genome_path);
    const Genome g = load_genome(genome_path);
    const CompiledNetwork net = compile(g);
    std::fputs(describe(net.plan).c_str(), stdout);

    const ComplexityReport report = complexity(g);
    std::printf("parameter_size %d\ndepth %d\nwidth %d\naverage_width %.4f\nskippiness %.6f\n",
                report.parameter_size, report.depth, report.width, report.average_width,
                report.skippiness);
    std::size_t mask_on = 0, mask_total = 0;
    for (const auto& layer : net.layers) {
        mask_total += layer.mask.size();
        for (const double v : layer.mask.values()) mask_on += v != 0.0 ? 1 : 0;
    }
    std::printf("mask_density %.6f (%zu of %zu slots)\n",
                mask_total ? static_cast<double>(mask_on) / mask_total : 0.0, mask_on, mask_total);
    return kExitOk;
}

int cmd_synth(const std::string& kind, int rows, std::uint64_t seed, const std::string& csv,
              const std::string& schema_path) {
    RawDataset raw;
    if (kind == "xor") {
        raw = make_xor_gaussians(rows, seed);
    } else if (kind == "credit") {
        raw = make_credit_like(rows, seed);
    } else {
        throw ConfigInvalid("unknown synthetic dataset kind: " + kind + " (expected xor|credit)");
    }
    write_csv(raw, csv);
    std::ofstream out(schema_path);
    out << schema_of(raw).to_text();
    std::printf("wrote %d rows to %s (schema %s)\n", raw.n_rows, csv.c_str(),
                schema_path.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"NEAT neuroevolution with genomes trained as compiled layered networks"};
    app.require_subcommand(1);

    RunOptions opt;

    auto* evolve = app.add_subcommand("evolve", "run the generational loop on a dataset");
    add_run_flags(evolve, opt, true);
    evolve->add_option("--trainer", opt.trainer, "propneat|naive|genetic");
    evolve->add_option("--iterations", opt.iterations, "repeat runs with seed+i");

    auto* retrain = app.add_subcommand("retrain",
                                       "densely retrain the minimal covering network of a genome");
    std::string genome_path, retrain_out;
    int retrain_epochs = 2000, retrain_patience = 50, retrain_batch = 0;
    add_run_flags(retrain, opt, false);
    retrain->add_option("--retrain-batch", retrain_batch, "retrain mini-batch size, 0 = full batch");
    retrain->add_option("--genome", genome_path, "best_genome.txt from an evolve run")->required();
    retrain->add_option("--max-epochs", retrain_epochs, "epoch budget");
    retrain->add_option("--patience", retrain_patience, "early stopping patience");
    retrain->add_option("--predictions", retrain_out, "write test predictions CSV here");

    auto* ablate = app.add_subcommand("ablate", "compare propneat, naive, and genetic trainers");
    std::string ablate_out;
    add_run_flags(ablate, opt, false);
    ablate->add_option("--out-table", ablate_out, "write the result table here");

    auto* bench = app.add_subcommand("bench-timing", "time-per-epoch scaling across depths");
    FamilySpec spec;
    std::string plot_out;
    bench->add_option("--depths", spec.depths, "layer counts to measure");
    bench->add_option("--params", spec.param_target, "parameter target per genome");
    bench->add_option("--inputs", spec.n_inputs, "input count");
    bench->add_option("--batch", spec.batch, "batch size");
    bench->add_option("--epochs", spec.epochs, "epochs per repeat");
    bench->add_option("--repeats", spec.repeats, "repeats per depth");
    bench->add_option("--seed", spec.seed, "seed");
    bench->add_option("--plot-data", plot_out, "write depth,size,width,time CSV here");

    auto* inspect = app.add_subcommand("inspect", "print layer plan and complexity of a genome");
    std::string inspect_path;
    inspect->add_option("genome", inspect_path, "genome file")->required();

    auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
    std::string synth_kind = "xor", synth_csv, synth_schema;
    int synth_rows = 1000;
    std::uint64_t synth_seed = 1;
    synth->add_option("--kind", synth_kind, "xor|credit");
    synth->add_option("--rows", synth_rows, "row count");
    synth->add_option("--seed", synth_seed, "seed");
    synth->add_option("--csv", synth_csv, "output CSV path")->required();
    synth->add_option("--schema", synth_schema, "output schema path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(evolve)) {
            apply_config_file(evolve, opt, true);
            return cmd_evolve(opt);
        }
        if (app.got_subcommand(retrain)) {
            apply_config_file(retrain, opt, false);
            return cmd_retrain(opt, genome_path, retrain_epochs, retrain_patience, retrain_batch,
                               retrain_out);
        }
        if (app.got_subcommand(ablate)) {
            apply_config_file(ablate, opt, false);
            return cmd_ablate(opt, ablate_out);
        }
        if (app.got_subcommand(bench)) return cmd_bench_timing(spec, plot_out);
        if (app.got_subcommand(inspect)) return cmd_inspect(inspect_path);
        if (app.got_subcommand(synth))
            return cmd_synth(synth_kind, synth_rows, synth_seed, synth_csv, synth_schema);
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const SchemaMismatch& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const TooFewRows& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ConfigInvalid& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
