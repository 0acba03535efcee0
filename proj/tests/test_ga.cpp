#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hybrid_id/errors.hpp"
#include "hybrid_id/ga.hpp"
#include "hybrid_id/io.hpp"
#include "hybrid_id/lm.hpp"
#include "hybrid_id/objective.hpp"

#include <cmath>
#include <limits>
#include <numeric>

using namespace hybrid_id;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

ParameterSpace unit_box(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
        names.push_back("p" + std::to_string(i));
    }
    return ParameterSpace(names, Vector::Zero(static_cast<Eigen::Index>(n)), Vector::Ones(static_cast<Eigen::Index>(n)));
}

Population with_fitness(std::initializer_list<double> fitness) {
    Population pop;
    for (double f : fitness) {
        Individual ind;
        ind.genes = vec({0.0});
        ind.fitness = f;
        pop.push_back(ind);
    }
    return pop;
}

std::vector<double> selection_frequencies(const Population& pop, std::size_t draws, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> counts(pop.size(), 0.0);
    std::size_t total = 0;
    while (total < draws) {
        for (auto idx : select_parents(pop, rng)) {
            counts[idx] += 1.0;
            ++total;
        }
    }
    for (auto& c : counts) {
        c /= static_cast<double>(total);
    }
    return counts;
}

} // namespace

TEST_CASE("config defaults follow the parameter count") {
    const auto cfg = GaConfig{}.resolved(4);
    CHECK(cfg.population_size == 40);
    CHECK(*cfg.mutation_prob == doctest::Approx(0.05));
    CHECK(cfg.generations == 30);
    CHECK(cfg.crossover_prob == 0.8);
    CHECK(cfg.elitism);

    GaConfig odd;
    odd.population_size = 7;
    CHECK_THROWS_AS((void)odd.resolved(2), ConfigError);
    GaConfig bad;
    bad.crossover_prob = 1.5;
    CHECK_THROWS_AS((void)bad.resolved(2), ConfigError);
}

TEST_CASE("initial population") {
    const ParameterSpace space({"a", "b", "c", "d"}, vec({0, -5, 10, 1e3}), vec({1, 5, 20, 2e3}));
    Rng rng(1);
    const auto pop = init_population(space, GaConfig{}, rng);
    CHECK(pop.size() == 40);
    for (const auto& ind : pop) {
        CHECK(space.contains(ind.genes));
    }

    Rng again(1);
    const auto same = init_population(space, GaConfig{}, again);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        CHECK(pop[i].genes == same[i].genes);
    }
}

TEST_CASE("fitness-proportional selection") {
    SUBCASE("equal fitness is uniform") {
        const auto freq = selection_frequencies(with_fitness({2, 2, 2, 2, 2, 2, 2, 2, 2, 2}), 200000, 3);
        for (double f : freq) {
            CHECK(f == doctest::Approx(0.1).epsilon(0.03));
        }
    }
    SUBCASE("one dominant individual") {
        // 10 individuals, the first holds 99% of the total fitness.
        Population pop = with_fitness({99.0 * 9.0, 1, 1, 1, 1, 1, 1, 1, 1, 1});
        const auto freq = selection_frequencies(pop, 200000, 4);
        const double expected_count = 0.99 * 10.0;
        CHECK(freq[0] * 10.0 == doctest::Approx(expected_count).epsilon(0.02));
    }
    SUBCASE("two individuals with fitness 3 and 1") {
        const auto freq = selection_frequencies(with_fitness({3, 1}), 100000, 5);
        CHECK(std::abs(freq[0] - 0.75) < 0.01);
    }
    SUBCASE("non-finite fitness is rejected") {
        Rng rng(1);
        CHECK_THROWS_AS((void)select_parents(with_fitness({1, std::numeric_limits<double>::infinity()}), rng),
                        EvaluationError);
        CHECK_THROWS_AS((void)select_parents(with_fitness({1, std::nan("")}), rng), EvaluationError);
    }
    SUBCASE("failed individuals are never selected") {
        const auto freq = selection_frequencies(with_fitness({0, 1, 0, 1}), 20000, 6);
        CHECK(freq[0] == 0.0);
        CHECK(freq[2] == 0.0);
    }
}

TEST_CASE("arithmetic crossover") {
    const Vector x1 = vec({1.0, -2.0, 10.0});
    const Vector x2 = vec({3.0, 4.0, 10.0});

    auto [a1, a2] = arithmetic_crossover(x1, x2, 1.0);
    CHECK(a1 == x1);
    CHECK(a2 == x2);

    auto [m1, m2] = arithmetic_crossover(x1, x2, 0.5);
    CHECK(m1 == vec({2.0, 1.0, 10.0}));
    CHECK(m2 == m1);

    auto [z1, z2] = arithmetic_crossover(x1, x2, 0.0);
    CHECK(z1 == x2);
    CHECK(z2 == x1);

    SUBCASE("sum preservation and closure for random a") {
        Rng rng(9);
        const auto space = ParameterSpace({"u", "v"}, vec({-3, 100}), vec({7, 1e5}));
        for (int k = 0; k < 2000; ++k) {
            const Vector p = vec({rng.uniform(-3, 7), rng.uniform(100, 1e5)});
            const Vector q = vec({rng.uniform(-3, 7), rng.uniform(100, 1e5)});
            auto [y1, y2] = arithmetic_crossover(p, q, rng.uniform01());
            CHECK(space.contains(y1));
            CHECK(space.contains(y2));
            for (Eigen::Index i = 0; i < 2; ++i) {
                // Exact in long double; one ulp of the larger parent gene.
                const long double drift = (static_cast<long double>(y1[i]) + y2[i]) -
                                          (static_cast<long double>(p[i]) + q[i]);
                const double big = std::max(std::abs(p[i]), std::abs(q[i]));
                CHECK(std::abs(drift) <= std::nextafter(big, INFINITY) - big);
            }
        }
    }
}

TEST_CASE("crossover probability") {
    Individual x1;
    Individual x2;
    x1.genes = vec({0.0, 0.0});
    x2.genes = vec({1.0, 1.0});
    Rng rng(10);
    auto [c1, c2] = crossover(x1, x2, rng, 0.0);
    CHECK(c1.genes == x1.genes);
    CHECK(c2.genes == x2.genes);

    int recombined = 0;
    for (int k = 0; k < 20000; ++k) {
        auto [y1, y2] = crossover(x1, x2, rng, 0.8);
        if (y1.genes != x1.genes) {
            ++recombined;
        }
        // a is shared by both genes
        CHECK(y1.genes[0] == y1.genes[1]);
    }
    CHECK(recombined / 20000.0 == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("mutation") {
    const ParameterSpace space({"x", "y"}, vec({0, -1}), vec({10, 1}));
    Individual ind;
    ind.genes = vec({3.0, 0.5});
    Rng rng(12);

    CHECK(mutate(ind, space, 0.0, rng).genes == ind.genes);

    const auto all = mutate(ind, space, 1.0, rng);
    CHECK(all.genes[0] != ind.genes[0]);
    CHECK(all.genes[1] != ind.genes[1]);
    CHECK(space.contains(all.genes));

    SUBCASE("uniform redraw has the interval mean") {
        double sum = 0.0;
        const int n = 100000;
        for (int k = 0; k < n; ++k) {
            sum += mutate(ind, space, 1.0, rng).genes[0];
        }
        CHECK(std::abs(sum / n - 5.0) < 0.05);
    }
    SUBCASE("gaussian mode stays in bounds") {
        for (int k = 0; k < 1000; ++k) {
            CHECK(space.contains(mutate(ind, space, 1.0, rng, MutationMode::Gaussian, 0.5).genes));
        }
    }
}

TEST_CASE("run_ga on a smooth bowl") {
    const auto space = unit_box(3);
    const Vector target = vec({0.3, 0.6, 0.9});
    const CostFunction bowl = [&](const Vector& x) { return (x - target).squaredNorm(); };

    GaConfig cfg;
    cfg.seed = 77;

    SUBCASE("zero generations returns the best initial individual") {
        cfg.generations = 0;
        const auto r = run_ga(bowl, space, cfg);
        CHECK(r.trace.generations.size() == 1);
        CHECK(r.trace.evaluations.size() == 30);
        double best = INFINITY;
        for (const auto& e : r.trace.evaluations) {
            best = std::min(best, e.cost);
        }
        CHECK(r.best.cost == best);
    }

    SUBCASE("elitism keeps the best cost nonincreasing") {
        const auto r = run_ga(bowl, space, cfg);
        CHECK(r.trace.generations.size() == 31);
        for (std::size_t g = 1; g < r.trace.generations.size(); ++g) {
            CHECK(r.trace.generations[g].best_cost <= r.trace.generations[g - 1].best_cost);
        }
        CHECK(r.best.cost == r.trace.generations.back().best_cost);
        CHECK(r.best.cost < 1e-2);
    }

    SUBCASE("population size is constant and every individual is in bounds") {
        const auto r = run_ga(bowl, space, cfg);
        std::vector<std::size_t> per_generation(31, 0);
        for (const auto& e : r.trace.evaluations) {
            ++per_generation[e.generation];
            CHECK(space.contains(e.genes));
            CHECK(e.fitness == adaptive_fitness(e.cost));
        }
        for (auto n : per_generation) {
            CHECK(n == 30);
        }
    }

    SUBCASE("seeded determinism, independent of evaluation threads") {
        const auto a = run_ga(bowl, space, cfg);
        cfg.threads = 3;
        const auto b = run_ga(bowl, space, cfg);
        REQUIRE(a.trace.evaluations.size() == b.trace.evaluations.size());
        for (std::size_t i = 0; i < a.trace.evaluations.size(); ++i) {
            CHECK(a.trace.evaluations[i].genes == b.trace.evaluations[i].genes);
            CHECK(a.trace.evaluations[i].cost == b.trace.evaluations[i].cost);
        }
    }

    SUBCASE("failed evaluations become infinite cost") {
        const CostFunction flaky = [&](const Vector& x) {
            if (x[0] > 0.5) {
                throw DomainError("outside the model domain");
            }
            return bowl(x);
        };
        const auto r = run_ga(flaky, space, cfg);
        bool saw_failure = false;
        for (const auto& e : r.trace.evaluations) {
            if (e.genes[0] > 0.5) {
                saw_failure = true;
                CHECK(std::isinf(e.cost));
                CHECK(e.fitness == 0.0);
            }
        }
        CHECK(saw_failure);
        CHECK(std::isfinite(r.best.cost));
    }
}

TEST_CASE("GA on the redundant sloppy problem gets close to the refined optimum") {
    std::vector<double> times;
    for (int i = 0; i <= 40; ++i) {
        times.push_back(0.1 * i);
    }
    const auto model = make_model("sloppy4");
    const TestDefinition test("redundant", {{"s", times, 1.0}}, Loading{"redundant", {}});
    const Vector truth = vec({1.5, -2.0, 3.0, 0.8});
    const Objective objective(model, generate_synthetic(*model, truth, {test}, 0.01, 21));
    const ParameterSpace space({"a", "b", "c", "d"}, vec({0, -4, 1, 0}), vec({3, 0, 5, 2}));

    // Oracle: LM refined from the truth gives the noisy-data optimum.
    const auto refined = run_lm(objective, truth, space, LmConfig{});
    const double optimum = refined.cost;
    REQUIRE(optimum > 0.0);

    int close = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        GaConfig cfg;
        cfg.seed = seed;
        const auto r = run_ga(objective, space, cfg);
        CHECK(r.best.cost >= optimum * (1.0 - 1e-9));
        if (r.best.cost <= 10.0 * optimum) {
            ++close;
        }
    }
    MESSAGE("GA runs within 10x of the refined optimum: " << close << "/10");
    CHECK(close >= 8);
}
