#include "hybrid_id/objective.hpp"

#include "hybrid_id/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hybrid_id {

SensorWeight sensor_weight(const MeasurementSeries& series) {
    if (series.values.empty()) {
        throw DegenerateWeightError("sensor '" + series.sensor_id + "': empty measurement series");
    }
    double peak = 0.0;
    for (double v : series.values) {
        peak = std::max(peak, std::abs(v));
    }
    if (peak == 0.0) {
        throw DegenerateWeightError("sensor '" + series.sensor_id + "': all measurements are zero, weight undefined");
    }
    const double chi = peak * peak;
    return {chi, 1.0 / chi};
}

double cost_single(const Vector& predicted, const MeasurementSeries& series) {
    if (static_cast<std::size_t>(predicted.size()) != series.values.size()) {
        throw DimensionError("sensor '" + series.sensor_id + "': " + std::to_string(predicted.size()) +
                             " predictions for " + std::to_string(series.values.size()) + " measurements");
    }
    const auto w = sensor_weight(series);
    double sum = 0.0;
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        const double r = residual(series.values[i], predicted[static_cast<Eigen::Index>(i)]);
        sum += r * r;
    }
    return sum * w.weight / (2.0 * static_cast<double>(series.values.size()));
}

double cost_single(const Vector& theta, const ForwardModel& model, const TestDefinition& test,
                   const std::string& sensor_id, const MeasurementSeries& series) {
    return cost_single(model.predict(theta, test, sensor_id), series);
}

CostBreakdown cost_multi(const Vector& theta, const ForwardModel& model, const ExperimentSet& dataset) {
    return Objective(std::shared_ptr<const ForwardModel>(&model, [](const ForwardModel*) {}), dataset)
        .evaluate(theta);
}

double adaptive_fitness(double cost) noexcept { return 1.0 / (cost + kFitnessEpsilon); }

Objective::Objective(std::shared_ptr<const ForwardModel> model, ExperimentSet dataset)
    : model_(std::move(model)), dataset_(std::move(dataset)) {
    if (!model_) {
        throw ConfigError("objective: null model");
    }
    if (dataset_.test_count() == 0) {
        throw DatasetError("objective: dataset has no tests");
    }
    const double n_test = static_cast<double>(dataset_.test_count());
    std::vector<double> chi;
    for (const auto& e : dataset_.experiments()) {
        auto& w = weights_.emplace_back();
        auto& s = scale_.emplace_back();
        const double n_sensor = static_cast<double>(e.test.sensors().size());
        for (const auto& sensor : e.test.sensors()) {
            const auto& series = dataset_.series(e.test.id(), sensor.id);
            const auto weight = sensor_weight(series);
            w.push_back(weight);
            const double n = static_cast<double>(series.values.size());
            s.push_back(std::sqrt(weight.weight / (2.0 * n_test * n_sensor * n)));
            chi.insert(chi.end(), series.values.size(), weight.chi);
            residual_count_ += series.values.size();
        }
    }
    chi_per_entry_ = Eigen::Map<const Vector>(chi.data(), static_cast<Eigen::Index>(chi.size()));
}

CostBreakdown Objective::evaluate(const Vector& theta) const {
    CostBreakdown out;
    out.residual_vector.resize(static_cast<Eigen::Index>(residual_count_));
    Eigen::Index row = 0;
    const double n_test = static_cast<double>(dataset_.test_count());
    for (std::size_t k = 0; k < dataset_.experiments().size(); ++k) {
        const auto& e = dataset_.experiments()[k];
        const double n_sensor = static_cast<double>(e.test.sensors().size());
        double test_cost = 0.0;
        for (std::size_t j = 0; j < e.test.sensors().size(); ++j) {
            const auto& sensor_id = e.test.sensors()[j].id;
            const auto& series = dataset_.series(e.test.id(), sensor_id);
            const Vector predicted = model_->predict(theta, e.test, sensor_id);
            if (static_cast<std::size_t>(predicted.size()) != series.values.size()) {
                throw DimensionError("model '" + model_->name() + "' returned " + std::to_string(predicted.size()) +
                                     " values for sensor '" + sensor_id + "'");
            }
            double sum = 0.0;
            for (std::size_t i = 0; i < series.values.size(); ++i) {
                const double r = residual(series.values[i], predicted[static_cast<Eigen::Index>(i)]);
                sum += r * r;
                out.residual_vector[row++] = scale_[k][j] * r;
            }
            const double sensor_cost = sum * weights_[k][j].weight / (2.0 * static_cast<double>(series.values.size()));
            out.per_sensor[{e.test.id(), sensor_id}] = sensor_cost;
            test_cost += sensor_cost;
        }
        test_cost /= n_sensor;
        out.per_test[e.test.id()] = test_cost;
        out.total += test_cost;
    }
    out.total /= n_test;
    return out;
}

double Objective::cost(const Vector& theta) const { return evaluate(theta).total; }

Vector Objective::residuals(const Vector& theta) const { return evaluate(theta).residual_vector; }

Vector Objective::simulate(const Vector& theta) const {
    Vector out(static_cast<Eigen::Index>(residual_count_));
    Eigen::Index row = 0;
    for (const auto& e : dataset_.experiments()) {
        for (const auto& sensor : e.test.sensors()) {
            const Vector predicted = model_->predict(theta, e.test, sensor.id);
            if (static_cast<std::size_t>(predicted.size()) != sensor.times.size()) {
                throw DimensionError("model '" + model_->name() + "' returned " + std::to_string(predicted.size()) +
                                     " values for sensor '" + sensor.id + "'");
            }
            out.segment(row, predicted.size()) = predicted;
            row += predicted.size();
        }
    }
    return out;
}

} // namespace hybrid_id
