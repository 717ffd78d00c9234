#include "propneat/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "propneat/compile.hpp"
#include "propneat/errors.hpp"
#include "propneat/naive.hpp"

namespace propneat {

const char* to_string(TrainerKind kind) {
    switch (kind) {
    case TrainerKind::propneat: return "propneat";
    case TrainerKind::naive: return "naive";
    case TrainerKind::genetic: return "genetic";
    }
    return "propneat";
}

TrainerKind trainer_from_string(const std::string& s) {
    if (s == "propneat") return TrainerKind::propneat;
    if (s == "naive") return TrainerKind::naive;
    if (s == "genetic") return TrainerKind::genetic;
    throw ConfigInvalid("unknown trainer: " + s + " (expected propneat|naive|genetic)");
}

Population initial_population(const EvolutionConfig& cfg, int n_inputs) {
    Population pop;
    pop.rng = Rng(cfg.seed);
    Genome proto;
    for (int i = 0; i < n_inputs; ++i) proto.nodes.push_back({i, NodeKind::input, 0.0});
    proto.nodes.push_back({n_inputs, NodeKind::output, 0.0});
    for (int i = 0; i < n_inputs; ++i)
        proto.connections.push_back({n_inputs + 1 + i, i, n_inputs, 0.0, true});
    pop.innovations = InnovationTracker(2 * n_inputs + 1);

    for (int i = 0; i < cfg.population_size; ++i) {
        Genome g = proto;
        for (auto& c : g.connections)
            c.weight = pop.rng.normal(cfg.weight_init.mean, cfg.weight_init.stddev);
        pop.genomes.push_back(std::move(g));
    }
    return pop;
}

std::vector<double> predict(const Genome& g, const Matrix& x) {
    try {
        const CompiledNetwork net = compile(g);
        const Matrix out = forward(net, x);
        return out.values();
    } catch (const UntrainableGenome&) {
        return std::vector<double>(static_cast<std::size_t>(x.cols()), 0.5);
    }
}

namespace {

struct TrainOutcome {
    Genome genome;
    double fitness = 0.5;
    bool untrainable = false;
    double final_train_loss = 0.0;
    std::vector<double> loss_curve;
    double wall_seconds = 0.0;
    double epoch_seconds = 0.0;
};

double validation_fitness(const std::vector<double>& scores, const Matrix& y_val) {
    try {
        return auc(scores, y_val.values());
    } catch (const SingleClass&) {
        return 0.5;
    }
}

TrainOutcome train_and_score(const Genome& g, TrainerKind trainer, const EvolutionConfig& cfg,
                             const Matrix& x_train, const Matrix& y_train, const Matrix& x_val,
                             const Matrix& y_val, bool needs_training) {
    TrainOutcome out;
    out.genome = g;
    const auto t0 = std::chrono::steady_clock::now();
    TrainConfig train_cfg;
    train_cfg.epochs = cfg.epochs_per_generation;
    train_cfg.batch_size = cfg.batch_size;

    switch (trainer) {
    case TrainerKind::propneat: {
        if (needs_training) {
            try {
                CompiledNetwork net = compile(g);
                const TrainResult r = train(net, x_train, y_train, train_cfg);
                out.genome = readback(net, g);
                out.loss_curve = r.loss_history;
                out.final_train_loss = r.final_loss;
                out.fitness = validation_fitness(forward(net, x_val).values(), y_val);
            } catch (const UntrainableGenome&) {
                out.untrainable = true;
                out.fitness = 0.5;
            }
        } else {
            out.fitness = validation_fitness(predict(g, x_val), y_val);
        }
        break;
    }
    case TrainerKind::naive: {
        if (needs_training) {
            try {
                NaiveTrainResult r = train_naive(g, x_train, y_train, train_cfg);
                out.genome = std::move(r.genome);
                out.loss_curve = std::move(r.loss_history);
                out.final_train_loss = r.final_loss;
                out.fitness =
                    validation_fitness(evaluate_naive(out.genome, x_val).values(), y_val);
            } catch (const UntrainableGenome&) {
                out.untrainable = true;
                out.fitness = 0.5;
            }
        } else {
            out.fitness = validation_fitness(evaluate_naive(g, x_val).values(), y_val);
        }
        break;
    }
    case TrainerKind::genetic: {
        // Original-style weight evolution: no backprop, per-node evaluation.
        out.fitness = validation_fitness(evaluate_naive(g, x_val).values(), y_val);
        break;
    }
    }
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (needs_training && trainer != TrainerKind::genetic && cfg.epochs_per_generation > 0)
        out.epoch_seconds = out.wall_seconds / cfg.epochs_per_generation;
    return out;
}

// Offspring counts proportional to species mean fitness, largest remainder,
// remainders broken by species order.
std::vector<int> allocate_offspring(const std::vector<double>& shares, int total) {
    std::vector<int> counts(shares.size(), 0);
    if (shares.empty() || total <= 0) return counts;
    double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
    std::vector<double> quota(shares.size(), 0.0);
    if (sum <= 0.0) {
        for (auto& q : quota) q = static_cast<double>(total) / shares.size();
    } else {
        for (std::size_t i = 0; i < shares.size(); ++i) quota[i] = total * shares[i] / sum;
    }
    int assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        counts[i] = static_cast<int>(std::floor(quota[i]));
        assigned += counts[i];
    }
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
    });
    for (std::size_t i = 0; assigned < total; ++i, assigned += 1)
        ++counts[order[i % order.size()]];
    return counts;
}

} // namespace

Offspring reproduce_population(Population& pop, const EvolutionConfig& cfg, TrainerKind trainer) {
    pop.innovations.begin_generation();
    Offspring next;

    // Rank members of each species by fitness (ties toward the lower index).
    struct Ranked {
        std::vector<int> members; // sorted best-first
        double mean_fitness = 0.0;
    };
    std::vector<Ranked> ranked;
    for (const auto& s : pop.species) {
        Ranked r;
        r.members = s.members;
        std::stable_sort(r.members.begin(), r.members.end(), [&](int a, int b) {
            return pop.genomes[static_cast<std::size_t>(a)].fitness.value_or(0.0) >
                   pop.genomes[static_cast<std::size_t>(b)].fitness.value_or(0.0);
        });
        for (int m : r.members)
            r.mean_fitness += pop.genomes[static_cast<std::size_t>(m)].fitness.value_or(0.0);
        if (!r.members.empty()) r.mean_fitness /= static_cast<double>(r.members.size());
        if (!r.members.empty()) ranked.push_back(std::move(r));
    }

    // Elites survive unchanged, one per species.
    const int elite_count = std::min<int>(static_cast<int>(ranked.size()), cfg.population_size);
    for (int i = 0; i < elite_count; ++i) {
        next.genomes.push_back(pop.genomes[static_cast<std::size_t>(ranked[static_cast<std::size_t>(i)].members.front())]);
        next.needs_training.push_back(false);
    }

    std::vector<double> shares;
    for (const auto& r : ranked) shares.push_back(r.mean_fitness);
    const std::vector<int> offspring =
        allocate_offspring(shares, cfg.population_size - elite_count);

    for (std::size_t s = 0; s < ranked.size(); ++s) {
        // Eliminate the weakest fraction from the breeding pool.
        const auto& members = ranked[s].members;
        const int survivors = std::max<int>(
            1, static_cast<int>(std::ceil((1.0 - cfg.elimination_fraction) * members.size())));
        std::vector<int> pool(members.begin(), members.begin() + survivors);

        for (int i = 0; i < offspring[s]; ++i) {
            Genome child;
            if (pool.size() >= 2) {
                int a = pool[static_cast<std::size_t>(pop.rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
                int b = a;
                while (b == a)
                    b = pool[static_cast<std::size_t>(pop.rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
                child = crossover(pop.genomes[static_cast<std::size_t>(a)],
                                  pop.genomes[static_cast<std::size_t>(b)], pop.rng);
            } else {
                child = pop.genomes[static_cast<std::size_t>(pool.front())];
                child.fitness.reset();
            }

            if (pop.rng.uniform() < cfg.p_add_connection)
                child = mutate_add_connection(child, pop.innovations, cfg.weight_init, pop.rng);
            if (pop.rng.uniform() < cfg.p_remove_connection)
                child = mutate_remove_connection(child, pop.rng);
            if (pop.rng.uniform() < cfg.p_add_node)
                child = mutate_add_node(child, pop.innovations, pop.rng);
            if (pop.rng.uniform() < cfg.p_remove_node)
                child = mutate_remove_node(child, pop.rng);
            if (cfg.p_reinit_weights > 0.0 && pop.rng.uniform() < cfg.p_reinit_weights)
                child = mutate_reinit_weights(child, cfg.weight_init, pop.rng);
            // Backprop trainers keep genome weights untouched by mutation.
            if (trainer == TrainerKind::genetic)
                child = mutate_perturb_weights(child, cfg.p_perturb_weight, cfg.perturb_stddev,
                                               cfg.p_replace_weight, cfg.weight_init, pop.rng);

            next.genomes.push_back(std::move(child));
            next.needs_training.push_back(true);
        }
    }
    return next;
}

GenerationReport run_generation(Population& pop, const PreparedDataset& data,
                                const EvolutionConfig& cfg, TrainerKind trainer, int jobs) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<bool> needs_training(pop.genomes.size(), true);
    if (pop.generation > 0) {
        Offspring next = reproduce_population(pop, cfg, trainer);
        pop.genomes = std::move(next.genomes);
        needs_training = std::move(next.needs_training);
    }
    // The genetic trainer evaluates everyone (weights moved by mutation);
    // backprop trainers skip unchanged elites.
    if (trainer == TrainerKind::genetic)
        std::fill(needs_training.begin(), needs_training.end(), true);

    const auto [x_train, y_train] = data.train_batch();
    const auto [x_val, y_val] = data.validation_batch();

    std::vector<TrainOutcome> outcomes(pop.genomes.size());
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (!needs_training[i] && pop.genomes[i].fitness.has_value()) {
                outcomes[i].genome = pop.genomes[i];
                outcomes[i].fitness = *pop.genomes[i].fitness;
            } else {
                outcomes[i] = train_and_score(pop.genomes[i], trainer, cfg, x_train, y_train,
                                              x_val, y_val, needs_training[i]);
            }
        }
    };
    const int thread_count = std::max(1, std::min<int>(jobs, static_cast<int>(pop.genomes.size())));
    if (thread_count == 1) {
        worker(0, pop.genomes.size());
    } else {
        std::vector<std::thread> threads;
        const std::size_t chunk = (pop.genomes.size() + thread_count - 1) / thread_count;
        for (int t = 0; t < thread_count; ++t) {
            const std::size_t begin = static_cast<std::size_t>(t) * chunk;
            const std::size_t end = std::min(pop.genomes.size(), begin + chunk);
            if (begin < end) threads.emplace_back(worker, begin, end);
        }
        for (auto& t : threads) t.join();
    }

    GenerationReport report;
    report.generation = pop.generation + 1;
    report.genomes.resize(pop.genomes.size());
    for (std::size_t i = 0; i < pop.genomes.size(); ++i) {
        pop.genomes[i] = std::move(outcomes[i].genome);
        pop.genomes[i].fitness = outcomes[i].fitness;
        GenomeReport& gr = report.genomes[i];
        gr.fitness = outcomes[i].fitness;
        gr.untrainable = outcomes[i].untrainable;
        gr.final_train_loss = outcomes[i].final_train_loss;
        gr.loss_curve = std::move(outcomes[i].loss_curve);
        gr.wall_seconds = outcomes[i].wall_seconds;
        gr.epoch_seconds = outcomes[i].epoch_seconds;
        try {
            gr.complexity = complexity(pop.genomes[i]);
        } catch (const UntrainableGenome&) {
            gr.complexity = ComplexityReport{};
        }
    }

    // Speciate on the evaluated population; representatives carry over.
    std::vector<Genome> reps;
    for (const auto& s : pop.species) reps.push_back(s.representative);
    const Speciation sp = speciate(pop.genomes, reps, cfg.compatibility_threshold, cfg.speciation);
    pop.species.clear();
    for (std::size_t s = 0; s < sp.next_representatives.size(); ++s) {
        Species species;
        species.id = static_cast<int>(s);
        species.representative = sp.next_representatives[s];
        pop.species.push_back(std::move(species));
    }
    for (std::size_t i = 0; i < sp.assignment.size(); ++i) {
        pop.genomes[i].species_id = sp.assignment[i];
        pop.species[static_cast<std::size_t>(sp.assignment[i])].members.push_back(static_cast<int>(i));
    }

    report.species_count = static_cast<int>(pop.species.size());
    report.best_index = 0;
    for (std::size_t i = 1; i < report.genomes.size(); ++i)
        if (report.genomes[i].fitness > report.genomes[static_cast<std::size_t>(report.best_index)].fitness)
            report.best_index = static_cast<int>(i);
    report.best_fitness = report.genomes[static_cast<std::size_t>(report.best_index)].fitness;
    for (const auto& gr : report.genomes) report.mean_fitness += gr.fitness;
    report.mean_fitness /= static_cast<double>(report.genomes.size());
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    ++pop.generation;
    return report;
}

EvolutionHistory run_evolution(const EvolutionConfig& cfg, const PreparedDataset& data,
                               TrainerKind trainer, int jobs) {
    cfg.validate();
    Population pop = initial_population(cfg, data.feature_dim());

    EvolutionHistory history;
    history.best_fitness = -1.0;
    // generations counts reproduction cycles after the trained initial
    // population; generations=0 still trains and evaluates that population.
    const int cycles = std::max(1, cfg.generations);
    for (int g = 0; g < cycles; ++g) {
        GenerationReport report = run_generation(pop, data, cfg, trainer, jobs);
        if (report.best_fitness > history.best_fitness) {
            history.best_fitness = report.best_fitness;
            history.best = pop.genomes[static_cast<std::size_t>(report.best_index)];
            history.best_generation = report.generation;
        }
        history.reports.push_back(std::move(report));
    }
    return history;
}

std::vector<EvolutionHistory> run_iterations(const EvolutionConfig& cfg,
                                             const PreparedDataset& data, TrainerKind trainer,
                                             int iterations, int jobs) {
    std::vector<EvolutionHistory> histories;
    for (int i = 0; i < iterations; ++i) {
        EvolutionConfig iter_cfg = cfg;
        iter_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
        histories.push_back(run_evolution(iter_cfg, data, trainer, jobs));
    }
    return histories;
}

} // namespace propneat
