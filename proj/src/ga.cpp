#include "hybrid_id/ga.hpp"

#include "hybrid_id/errors.hpp"
#include "hybrid_id/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace hybrid_id {

GaConfig GaConfig::resolved(std::size_t parameter_count) const {
    GaConfig out = *this;
    if (out.population_size == 0) {
        out.population_size = 10 * parameter_count;
    }
    if (out.population_size < 2 || out.population_size % 2 != 0) {
        throw ConfigError("ga: population_size must be even and >= 2, got " + std::to_string(out.population_size));
    }
    if (!out.mutation_prob) {
        out.mutation_prob = 2.0 / static_cast<double>(out.population_size);
    }
    if (!(out.crossover_prob >= 0.0 && out.crossover_prob <= 1.0)) {
        throw ConfigError("ga: crossover_prob must lie in [0, 1]");
    }
    if (!(*out.mutation_prob >= 0.0 && *out.mutation_prob <= 1.0)) {
        throw ConfigError("ga: mutation_prob must lie in [0, 1]");
    }
    if (out.mutation_mode == MutationMode::Gaussian && !(out.gaussian_sigma > 0.0)) {
        throw ConfigError("ga: gaussian_sigma must be positive");
    }
    if (out.threads == 0) {
        out.threads = 1;
    }
    return out;
}

Population init_population(const ParameterSpace& space, const GaConfig& config, Rng& rng) {
    const auto resolved = config.resolved(space.count());
    Population population(resolved.population_size);
    for (auto& ind : population) {
        ind.genes.resize(static_cast<Eigen::Index>(space.count()));
        for (Eigen::Index i = 0; i < ind.genes.size(); ++i) {
            ind.genes[i] = rng.uniform(space.lower()[i], space.upper()[i]);
        }
    }
    return population;
}

std::vector<std::size_t> select_parents(const Population& population, Rng& rng) {
    std::vector<double> cumulative;
    cumulative.reserve(population.size());
    double total = 0.0;
    for (const auto& ind : population) {
        if (!std::isfinite(ind.fitness) || ind.fitness < 0.0) {
            throw EvaluationError("select_parents: fitness must be finite and non-negative");
        }
        total += ind.fitness;
        cumulative.push_back(total);
    }
    std::vector<std::size_t> parents(population.size());
    for (auto& p : parents) {
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
            p = std::min(static_cast<std::size_t>(it - cumulative.begin()), population.size() - 1);
        } else {
            // Every member failed to evaluate: fall back to uniform sampling.
            p = std::min(static_cast<std::size_t>(rng.uniform01() * static_cast<double>(population.size())),
                         population.size() - 1);
        }
    }
    return parents;
}

std::pair<Vector, Vector> arithmetic_crossover(const Vector& x1, const Vector& x2, double a) {
    if (x1.size() != x2.size()) {
        throw DimensionError("crossover: parents have different gene counts");
    }
    // One shared product keeps y1 + y2 == x1 + x2 up to the final roundings;
    // clamping to the parents' hull makes bound closure exact.
    Vector y1(x1.size());
    Vector y2(x1.size());
    for (Eigen::Index i = 0; i < x1.size(); ++i) {
        const double shift = a * (x1[i] - x2[i]);
        const double lo = std::min(x1[i], x2[i]);
        const double hi = std::max(x1[i], x2[i]);
        y1[i] = std::clamp(x2[i] + shift, lo, hi);
        y2[i] = std::clamp(x1[i] - shift, lo, hi);
    }
    return {std::move(y1), std::move(y2)};
}

std::pair<Individual, Individual> crossover(const Individual& x1, const Individual& x2, Rng& rng,
                                            double crossover_prob) {
    if (rng.uniform01() >= crossover_prob) {
        return {x1, x2};
    }
    const double a = rng.uniform01();
    auto [g1, g2] = arithmetic_crossover(x1.genes, x2.genes, a);
    Individual y1;
    Individual y2;
    y1.genes = std::move(g1);
    y2.genes = std::move(g2);
    return {std::move(y1), std::move(y2)};
}

Individual mutate(const Individual& individual, const ParameterSpace& space, double mutation_prob, Rng& rng,
                  MutationMode mode, double gaussian_sigma) {
    if (static_cast<std::size_t>(individual.genes.size()) != space.count()) {
        throw DimensionError("mutate: gene count does not match parameter space");
    }
    Individual out = individual;
    bool changed = false;
    for (Eigen::Index i = 0; i < out.genes.size(); ++i) {
        if (rng.uniform01() >= mutation_prob) {
            continue;
        }
        changed = true;
        const double lo = space.lower()[i];
        const double hi = space.upper()[i];
        if (mode == MutationMode::UniformRedraw) {
            out.genes[i] = rng.uniform(lo, hi);
        } else {
            out.genes[i] = std::clamp(out.genes[i] + rng.normal(0.0, gaussian_sigma * (hi - lo)), lo, hi);
        }
    }
    if (changed) {
        out.cost = 0.0;
        out.fitness = 0.0;
    }
    return out;
}

namespace {

void evaluate_one(Individual& ind, const CostFunction& cost) {
    double c = std::numeric_limits<double>::infinity();
    try {
        c = cost(ind.genes);
    } catch (const std::exception&) {
        // failed evaluation: leave the cost at +inf
    }
    if (!std::isfinite(c) || c < 0.0) {
        c = std::numeric_limits<double>::infinity();
    }
    ind.cost = c;
    ind.fitness = std::isfinite(c) ? adaptive_fitness(c) : 0.0;
}

double mean_finite_cost(const Population& population) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& ind : population) {
        if (std::isfinite(ind.cost)) {
            sum += ind.cost;
            ++n;
        }
    }
    return n == 0 ? std::numeric_limits<double>::infinity() : sum / static_cast<double>(n);
}

std::size_t best_index(const Population& population) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < population.size(); ++i) {
        if (population[i].cost < population[best].cost) {
            best = i;
        }
    }
    return best;
}

} // namespace

void evaluate_population(Population& population, const CostFunction& cost, std::size_t threads) {
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(population.size(), 1));
    if (threads == 1) {
        for (auto& ind : population) {
            evaluate_one(ind, cost);
        }
        return;
    }
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
            for (std::size_t i = w; i < population.size(); i += threads) {
                evaluate_one(population[i], cost);
            }
        });
    }
}

GaResult run_ga(const CostFunction& cost, const ParameterSpace& space, const GaConfig& config) {
    const auto cfg = config.resolved(space.count());
    Rng rng(cfg.seed);
    GaResult result;

    auto record = [&](const Population& population, std::size_t generation) {
        const auto& best = population[best_index(population)];
        result.trace.generations.push_back({generation, best.cost, mean_finite_cost(population), best.genes});
        if (cfg.record_evaluations) {
            for (const auto& ind : population) {
                result.trace.evaluations.push_back({ind.genes, ind.cost, ind.fitness, generation});
            }
        }
    };

    Population population = init_population(space, cfg, rng);
    evaluate_population(population, cost, cfg.threads);
    Individual best_ever = population[best_index(population)];
    record(population, 0);

    for (std::size_t generation = 1; generation <= cfg.generations; ++generation) {
        const auto parents = select_parents(population, rng);
        Population children;
        children.reserve(population.size());
        for (std::size_t p = 0; p + 1 < parents.size(); p += 2) {
            auto [y1, y2] = crossover(population[parents[p]], population[parents[p + 1]], rng, cfg.crossover_prob);
            children.push_back(mutate(y1, space, *cfg.mutation_prob, rng, cfg.mutation_mode, cfg.gaussian_sigma));
            children.push_back(mutate(y2, space, *cfg.mutation_prob, rng, cfg.mutation_mode, cfg.gaussian_sigma));
        }
        evaluate_population(children, cost, cfg.threads);

        if (cfg.elitism) {
            auto worst = std::max_element(children.begin(), children.end(),
                                          [](const Individual& l, const Individual& r) { return l.cost < r.cost; });
            *worst = best_ever;
        }
        population = std::move(children);
        const auto& best_now = population[best_index(population)];
        if (best_now.cost < best_ever.cost) {
            best_ever = best_now;
        }
        record(population, generation);
    }

    result.best = best_ever;
    return result;
}

GaResult run_ga(const Objective& objective, const ParameterSpace& space, const GaConfig& config) {
    if (space.count() != objective.parameter_count()) {
        throw DimensionError("run_ga: space has " + std::to_string(space.count()) + " parameters, model expects " +
                             std::to_string(objective.parameter_count()));
    }
    return run_ga([&objective](const Vector& theta) { return objective.cost(theta); }, space, config);
}

} // namespace hybrid_id
