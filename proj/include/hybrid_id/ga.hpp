#pragma once

#include "hybrid_id/model.hpp"
#include "hybrid_id/random.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace hybrid_id {

class Objective;

using CostFunction = std::function<double(const Vector&)>;

struct Individual {
    Vector genes;
    double cost = 0.0;
    double fitness = 0.0;
};

using Population = std::vector<Individual>;

enum class MutationMode {
    UniformRedraw, // gene replaced by a fresh uniform draw over its interval
    Gaussian,      // gene perturbed by N(0, gaussian_sigma * width), clamped
};

struct GaConfig {
    std::size_t population_size = 0;     // 0 means 10 * parameter count
    std::size_t generations = 30;
    double crossover_prob = 0.8;
    std::optional<double> mutation_prob; // unset means 2 / population_size
    bool elitism = true;
    MutationMode mutation_mode = MutationMode::UniformRedraw;
    double gaussian_sigma = 0.1;
    std::uint64_t seed = 0;
    std::size_t threads = 1;             // cost evaluations only; results do not depend on it
    bool record_evaluations = true;

    // Fills in the size-dependent defaults and validates.
    [[nodiscard]] GaConfig resolved(std::size_t parameter_count) const;
};

struct GenerationRecord {
    std::size_t generation = 0;
    double best_cost = 0.0;
    double mean_cost = 0.0; // over finite costs
    Vector best_genes;
};

struct EvaluatedPoint {
    Vector genes;
    double cost = 0.0;
    double fitness = 0.0;
    std::size_t generation = 0;
};

struct GaTrace {
    std::vector<GenerationRecord> generations;
    std::vector<EvaluatedPoint> evaluations; // every member of every generation, in order
};

struct GaResult {
    Individual best;
    GaTrace trace;
};

[[nodiscard]] Population init_population(const ParameterSpace& space, const GaConfig& config, Rng& rng);

/// Roulette-wheel sampling with replacement. Returns population.size() parent
/// indices; consecutive entries form a couple.
[[nodiscard]] std::vector<std::size_t> select_parents(const Population& population, Rng& rng);

/// Arithmetic crossover with a fixed mixing coefficient a in [0, 1]:
/// y1 = a x1 + (1 - a) x2, y2 = (1 - a) x1 + a x2.
[[nodiscard]] std::pair<Vector, Vector> arithmetic_crossover(const Vector& x1, const Vector& x2, double a);

/// With probability crossover_prob draws a ~ U(0,1) once for the couple and
/// recombines; otherwise the children are copies of the parents.
[[nodiscard]] std::pair<Individual, Individual> crossover(const Individual& x1, const Individual& x2, Rng& rng,
                                                          double crossover_prob);

[[nodiscard]] Individual mutate(const Individual& individual, const ParameterSpace& space, double mutation_prob,
                                Rng& rng, MutationMode mode = MutationMode::UniformRedraw,
                                double gaussian_sigma = 0.1);

/// Evaluates cost and fitness; failures and non-finite costs become +inf.
void evaluate_population(Population& population, const CostFunction& cost, std::size_t threads);

[[nodiscard]] GaResult run_ga(const CostFunction& cost, const ParameterSpace& space, const GaConfig& config);
[[nodiscard]] GaResult run_ga(const Objective& objective, const ParameterSpace& space, const GaConfig& config);

} // namespace hybrid_id
