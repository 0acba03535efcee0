#pragma once

#include "hybrid_id/model.hpp"

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hybrid_id {

/// chi = (max_i |m(t_i)|)^2 and weight = 1/chi.
struct SensorWeight {
    double chi = 0.0;
    double weight = 0.0;
};

using SensorKey = std::pair<std::string, std::string>; // (test_id, sensor_id)

struct CostBreakdown {
    double total = 0.0;
    std::map<std::string, double> per_test;
    std::map<SensorKey, double> per_sensor;
    // Flattened over (test, sensor, instant) and scaled so that total == residual_vector.squaredNorm().
    Vector residual_vector;
};

inline constexpr double kFitnessEpsilon = 1e-12;

[[nodiscard]] inline double residual(double measured, double predicted) noexcept { return measured - predicted; }

[[nodiscard]] SensorWeight sensor_weight(const MeasurementSeries& series);

/// Single test, single sensor: (1/2N) * (1/chi) * sum_i (m_i - h_i)^2.
[[nodiscard]] double cost_single(const Vector& theta, const ForwardModel& model, const TestDefinition& test,
                                 const std::string& sensor_id, const MeasurementSeries& series);

/// Same quantity from precomputed predictions; used where no model is involved.
[[nodiscard]] double cost_single(const Vector& predicted, const MeasurementSeries& series);

/// Multi-test, multi-sensor cost: mean over tests of the mean over that test's
/// sensors of the single-sensor cost. Weights come from the measurements only.
[[nodiscard]] CostBreakdown cost_multi(const Vector& theta, const ForwardModel& model, const ExperimentSet& dataset);

/// GA adaptive function 1/(f + 1e-12).
[[nodiscard]] double adaptive_fitness(double cost) noexcept;

/// Model + data bound together, with sensor weights frozen at construction.
/// Thread-safe for concurrent evaluation.
class Objective {
public:
    Objective(std::shared_ptr<const ForwardModel> model, ExperimentSet dataset);

    [[nodiscard]] const ForwardModel& model() const noexcept { return *model_; }
    [[nodiscard]] const std::shared_ptr<const ForwardModel>& model_ptr() const noexcept { return model_; }
    [[nodiscard]] const ExperimentSet& dataset() const noexcept { return dataset_; }
    [[nodiscard]] std::size_t parameter_count() const { return model_->parameter_count(); }
    [[nodiscard]] std::size_t residual_count() const noexcept { return residual_count_; }

    [[nodiscard]] CostBreakdown evaluate(const Vector& theta) const;
    [[nodiscard]] double cost(const Vector& theta) const;
    [[nodiscard]] Vector residuals(const Vector& theta) const;

    /// Concatenated model responses over (test, sensor, instant), plus the
    /// chi of the sensor each entry belongs to.
    [[nodiscard]] Vector simulate(const Vector& theta) const;
    [[nodiscard]] const Vector& chi_per_entry() const noexcept { return chi_per_entry_; }

private:
    std::shared_ptr<const ForwardModel> model_;
    ExperimentSet dataset_;
    std::vector<std::vector<SensorWeight>> weights_; // [test][sensor]
    std::vector<std::vector<double>> scale_;         // sqrt(V / (2 N_test N_S N))
    Vector chi_per_entry_;
    std::size_t residual_count_ = 0;
};

} // namespace hybrid_id
