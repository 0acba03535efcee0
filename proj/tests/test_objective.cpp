#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hybrid_id/errors.hpp"
#include "hybrid_id/io.hpp"
#include "hybrid_id/objective.hpp"
#include "hybrid_id/random.hpp"

#include <cmath>

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

// h(t) = theta0 regardless of t.
class ConstantModel final : public ForwardModel {
public:
    std::string name() const override { return "constant"; }
    std::vector<std::string> parameter_names() const override { return {"c"}; }
    Vector predict(const Vector& theta, const TestDefinition& test, const std::string& sensor_id) const override {
        const auto& s = test.sensor(sensor_id);
        return Vector::Constant(static_cast<Eigen::Index>(s.times.size()), s.gain * theta[0]);
    }
};

std::vector<TestDefinition> creep_tests() {
    std::vector<double> t1;
    std::vector<double> t2;
    for (int i = 0; i <= 20; ++i) {
        t1.push_back(1.5 * i);
    }
    for (int i = 0; i <= 12; ++i) {
        t2.push_back(2.5 * i);
    }
    return {TestDefinition("low", {{"axial", t1, 1.0}, {"hoop", t2, -0.35}}, Loading{"", {{0, 10}}}),
            TestDefinition("step", {{"axial", t2, 1.0}}, Loading{"", {{0, 8}, {12, 20}}})};
}

} // namespace

TEST_CASE("residual sign convention") {
    CHECK(residual(5.0, 3.0) == 2.0);
    CHECK(residual(1.25, 1.25) == 0.0);
    CHECK(residual(0.0, 1.5) == -1.5);
}

TEST_CASE("sensor weights") {
    auto w = sensor_weight({"s", {3, -4, 2}});
    CHECK(w.chi == 16.0);
    CHECK(w.weight == 0.0625);
    w = sensor_weight({"s", {200, 100}});
    CHECK(w.chi == 40000.0);
    CHECK(w.weight == doctest::Approx(2.5e-5).epsilon(1e-15));
    CHECK(w.weight * w.chi == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)sensor_weight({"s", {0, 0}}), DegenerateWeightError);
    CHECK_THROWS_AS((void)sensor_weight({"s", {}}), DegenerateWeightError);
}

TEST_CASE("single-sensor cost") {
    const ConstantModel model;
    const TestDefinition test("t", {{"s", {0, 1}, 1.0}}, Loading{});
    const MeasurementSeries m{"s", {2, 2}};
    CHECK(cost_single(vec({0}), model, test, "s", m) == 0.5);
    CHECK(cost_single(vec({2}), model, test, "s", m) == 0.0);
    CHECK_THROWS_AS((void)cost_single(vec({0, 0, 0}), MeasurementSeries{"s", {1, 2}}), DimensionError);
}

TEST_CASE("creep3 cost grows away from the truth along every direction") {
    // Dense-grid oracle: sample the cost along rays from the truth and check
    // it is zero at the truth and strictly increasing for small steps.
    const auto model = make_model("creep3");
    const Vector truth = vec({1000, 2000, 5});
    const auto data = generate_synthetic(*model, truth, creep_tests(), 0.0, 1);
    const Objective objective(model, data);
    CHECK(objective.cost(truth) == 0.0);

    Rng rng(42);
    for (int ray = 0; ray < 25; ++ray) {
        Vector dir = vec({rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1)});
        dir /= dir.norm();
        double previous = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double s = 1e-3 * k;
            const Vector theta = truth.cwiseProduct(Vector::Ones(3) + s * dir);
            const double f = objective.cost(theta);
            REQUIRE(f > previous);
            previous = f;
        }
    }
}

TEST_CASE("multi-test cost aggregation") {
    const auto model = make_model("creep3");
    const Vector truth = vec({1000, 2000, 5});
    const Vector theta = vec({900, 2600, 7});
    const auto tests = creep_tests();
    const auto data = generate_synthetic(*model, truth, tests, 0.02, 9);

    SUBCASE("single test and sensor reduces to the single-sensor cost") {
        const TestDefinition one("low", {tests[0].sensors()[0]}, tests[0].loading());
        const ExperimentSet single({{one, {data.series("low", "axial")}}});
        CHECK(cost_multi(theta, *model, single).total ==
              doctest::Approx(cost_single(theta, *model, one, "axial", data.series("low", "axial"))).epsilon(1e-15));
    }

    SUBCASE("nested averaging with unequal sensor and acquisition counts") {
        // Independent evaluation straight from the definition.
        double expected = 0.0;
        for (const auto& e : data.experiments()) {
            double per_test = 0.0;
            for (const auto& s : e.test.sensors()) {
                const auto& m = data.series(e.test.id(), s.id).values;
                const Vector h = model->predict(theta, e.test, s.id);
                double peak = 0.0;
                double sum = 0.0;
                for (std::size_t i = 0; i < m.size(); ++i) {
                    peak = std::max(peak, std::abs(m[i]));
                    sum += (m[i] - h[static_cast<Eigen::Index>(i)]) * (m[i] - h[static_cast<Eigen::Index>(i)]);
                }
                per_test += sum / (peak * peak) / (2.0 * static_cast<double>(m.size()));
            }
            expected += per_test / static_cast<double>(e.test.sensors().size());
        }
        expected /= static_cast<double>(data.test_count());
        const auto breakdown = cost_multi(theta, *model, data);
        CHECK(breakdown.total == doctest::Approx(expected).epsilon(1e-13));
        CHECK(breakdown.per_test.size() == 2);
        CHECK(breakdown.per_sensor.size() == 3);
    }

    SUBCASE("residual vector squares sum to the total") {
        Rng rng(8);
        for (int k = 0; k < 50; ++k) {
            const Vector t = vec({rng.uniform(500, 1500), rng.uniform(1000, 3000), rng.uniform(1, 10)});
            const auto b = cost_multi(t, *model, data);
            CHECK(b.total >= 0.0);
            CHECK(b.residual_vector.squaredNorm() == doctest::Approx(b.total).epsilon(1e-12));
        }
    }

    SUBCASE("exact fit gives zero everywhere") {
        const auto exact = generate_synthetic(*model, truth, tests, 0.0, 1);
        const auto b = cost_multi(truth, *model, exact);
        CHECK(b.total == 0.0);
        CHECK(b.residual_vector.cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("duplicating every test leaves the total unchanged") {
        std::vector<Experiment> doubled = data.experiments();
        for (const auto& e : data.experiments()) {
            doubled.push_back({TestDefinition(e.test.id() + "_copy", e.test.sensors(), e.test.loading()), e.series});
        }
        const double once = cost_multi(theta, *model, data).total;
        const double twice = cost_multi(theta, *model, ExperimentSet(doubled)).total;
        CHECK(twice == doctest::Approx(once).epsilon(1e-14));
    }
}

TEST_CASE("cost is dimensionless per sensor") {
    const auto model = make_model("creep3");
    const Vector truth = vec({1000, 2000, 5});
    const Vector theta = vec({1100, 1700, 4});
    auto tests = creep_tests();
    const auto data = generate_synthetic(*model, truth, tests, 0.01, 4);
    const double base = cost_multi(theta, *model, data).total;

    for (double c : {1e3, -250.0, 1e-4}) {
        // Scale the hoop sensor's model output (gain) and its measurements by c.
        std::vector<Experiment> scaled;
        for (const auto& e : data.experiments()) {
            std::vector<SensorDefinition> sensors = e.test.sensors();
            std::vector<MeasurementSeries> series = e.series;
            for (auto& s : sensors) {
                if (e.test.id() == "low" && s.id == "hoop") {
                    s.gain *= c;
                }
            }
            for (auto& m : series) {
                if (e.test.id() == "low" && m.sensor_id == "hoop") {
                    for (auto& v : m.values) {
                        v *= c;
                    }
                }
            }
            scaled.push_back({TestDefinition(e.test.id(), sensors, e.test.loading()), series});
        }
        CHECK(cost_multi(theta, *model, ExperimentSet(scaled)).total == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("adaptive fitness") {
    CHECK(adaptive_fitness(1.0) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(adaptive_fitness(0.0) == doctest::Approx(1e12));
    Rng rng(2);
    for (int k = 0; k < 1000; ++k) {
        const double a = std::exp(rng.uniform(-30, 5));
        const double b = a * (1.0 + rng.uniform(1e-6, 1.0));
        CHECK(adaptive_fitness(a) > adaptive_fitness(b));
    }
}

TEST_CASE("objective simulate lines up with chi per entry") {
    const auto model = make_model("creep3");
    const auto data = generate_synthetic(*model, vec({1000, 2000, 5}), creep_tests(), 0.0, 1);
    const Objective objective(model, data);
    CHECK(objective.simulate(vec({1000, 2000, 5})).size() == static_cast<Eigen::Index>(objective.residual_count()));
    CHECK(objective.chi_per_entry().size() == static_cast<Eigen::Index>(objective.residual_count()));
    CHECK(objective.residual_count() == 21 + 13 + 13);
}
