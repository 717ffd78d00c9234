#include "propneat/runio.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "propneat/errors.hpp"

namespace propneat {

namespace {

using json = nlohmann::ordered_json;

json complexity_json(const ComplexityReport& c) {
    return json{{"parameter_size", c.parameter_size},
                {"depth", c.depth},
                {"width", c.width},
                {"average_width", c.average_width},
                {"skippiness", c.skippiness}};
}

} // namespace

std::vector<std::string> deterministic_run_files() {
    return {"config.txt", "generations.jsonl", "best_genome.txt", "predictions.csv",
            "summary.json"};
}

void write_run_directory(const std::filesystem::path& dir, const RunPayload& payload) {
    namespace fs = std::filesystem;
    if (fs::exists(dir) && !fs::is_empty(dir))
        throw std::runtime_error("run directory already exists and is not empty: " + dir.string());
    fs::create_directories(dir);

    {
        std::ofstream out(dir / "config.txt");
        for (const auto& [key, value] : payload.config) out << key << "=" << value << "\n";
    }
    {
        std::ofstream out(dir / "generations.jsonl");
        for (const auto& report : payload.history.reports) {
            json record{{"seed", payload.seed},
                        {"generation", report.generation},
                        {"best_index", report.best_index},
                        {"best_fitness", report.best_fitness},
                        {"mean_fitness", report.mean_fitness},
                        {"species", report.species_count}};
            json fitness = json::array();
            json final_loss = json::array();
            for (const auto& g : report.genomes) {
                fitness.push_back(g.fitness);
                final_loss.push_back(g.final_train_loss);
            }
            record["fitness"] = std::move(fitness);
            record["final_train_loss"] = std::move(final_loss);
            record["best_complexity"] =
                complexity_json(report.genomes[static_cast<std::size_t>(report.best_index)].complexity);
            out << record.dump() << "\n";
        }
    }
    save_genome(payload.history.best, dir / "best_genome.txt");
    {
        std::ofstream out(dir / "predictions.csv");
        out << "# seed=" << payload.seed << "\n";
        out << "index,label,score\n";
        char buf[96];
        for (std::size_t i = 0; i < payload.test_scores.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%g,%.17g\n", i, payload.test_labels[i],
                          payload.test_scores[i]);
            out << buf;
        }
    }
    {
        json summary{{"seed", payload.seed},
                     {"trainer", payload.trainer},
                     {"test_auc", payload.test_auc},
                     {"best_generation", payload.history.best_generation},
                     {"best_fitness", payload.history.best_fitness},
                     {"generations", payload.history.reports.size()}};
        std::ofstream out(dir / "summary.json");
        out << summary.dump(2) << "\n";
    }
    {
        // Wall-clock measurements; not covered by the determinism contract.
        std::ofstream out(dir / "timings.csv");
        out << "# seed=" << payload.seed << "\n";
        out << "generation,mean_epoch_seconds,mean_wall_seconds,generation_wall_seconds\n";
        char buf[160];
        for (const auto& report : payload.history.reports) {
            double epoch_sum = 0.0, wall_sum = 0.0;
            int trained = 0;
            for (const auto& g : report.genomes) {
                wall_sum += g.wall_seconds;
                if (g.epoch_seconds > 0.0) {
                    epoch_sum += g.epoch_seconds;
                    ++trained;
                }
            }
            std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", report.generation,
                          trained ? epoch_sum / trained : 0.0,
                          report.genomes.empty() ? 0.0 : wall_sum / report.genomes.size(),
                          report.wall_seconds);
            out << buf;
        }
    }
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path.string());
    std::map<std::string, std::string> config;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        config[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return config;
}

} // namespace propneat
