#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hybrid_id {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ordered parameter names with a box [lower, upper] per parameter.
class ParameterSpace {
public:
    ParameterSpace() = default;
    ParameterSpace(std::vector<std::string> names, Vector lower, Vector upper);

    [[nodiscard]] std::size_t count() const noexcept { return names_.size(); }
    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] const Vector& lower() const noexcept { return lower_; }
    [[nodiscard]] const Vector& upper() const noexcept { return upper_; }
    [[nodiscard]] double width(std::size_t i) const { return upper_[i] - lower_[i]; }
    [[nodiscard]] std::size_t index_of(const std::string& name) const;

    [[nodiscard]] bool contains(const Vector& theta) const;
    // true when this box lies inside `outer` (same names).
    [[nodiscard]] bool nested_in(const ParameterSpace& outer) const;

    bool operator==(const ParameterSpace&) const = default;

private:
    std::vector<std::string> names_;
    Vector lower_;
    Vector upper_;
};

/// Projects every component of theta onto its interval.
[[nodiscard]] Vector clamp_to_bounds(const Vector& theta, const ParameterSpace& space);

/// Piecewise-constant load history: stress jumps to `stress` at `time`.
struct LoadStep {
    double time = 0.0;
    double stress = 0.0;
    bool operator==(const LoadStep&) const = default;
};

/// What the forward model needs to know about the test protocol. `kind`
/// selects a response family for models that have several (e.g. "restricted").
struct Loading {
    std::string kind;
    std::vector<LoadStep> steps;
    bool operator==(const Loading&) const = default;
};

struct SensorDefinition {
    std::string id;
    std::vector<double> times; // strictly increasing, >= 2 entries
    double gain = 1.0;         // multiplies the model response seen by this sensor
    bool operator==(const SensorDefinition&) const = default;
};

class TestDefinition {
public:
    TestDefinition() = default;
    TestDefinition(std::string id, std::vector<SensorDefinition> sensors, Loading loading);

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] const std::vector<SensorDefinition>& sensors() const noexcept { return sensors_; }
    [[nodiscard]] const Loading& loading() const noexcept { return loading_; }
    [[nodiscard]] const SensorDefinition& sensor(const std::string& sensor_id) const;

    bool operator==(const TestDefinition&) const = default;

private:
    std::string id_;
    std::vector<SensorDefinition> sensors_;
    Loading loading_;
};

struct MeasurementSeries {
    std::string sensor_id;
    std::vector<double> values;
    bool operator==(const MeasurementSeries&) const = default;
};

/// One test with its measured series, one per sensor, in sensor order.
struct Experiment {
    TestDefinition test;
    std::vector<MeasurementSeries> series;
    bool operator==(const Experiment&) const = default;
};

/// Tests x sensors x time-stamped measurements.
class ExperimentSet {
public:
    ExperimentSet() = default;
    explicit ExperimentSet(std::vector<Experiment> experiments);

    [[nodiscard]] const std::vector<Experiment>& experiments() const noexcept { return experiments_; }
    [[nodiscard]] std::size_t test_count() const noexcept { return experiments_.size(); }
    [[nodiscard]] const MeasurementSeries& series(const std::string& test_id,
                                                  const std::string& sensor_id) const;
    // Keeps only the listed tests, in the listed order.
    [[nodiscard]] ExperimentSet subset(const std::vector<std::string>& test_ids) const;

    bool operator==(const ExperimentSet&) const = default;

private:
    std::vector<Experiment> experiments_;
};

/// Deterministic map (theta, test, sensor) -> predicted series h(theta, t_i).
/// Implementations must be pure so they can be shared between threads.
class ForwardModel {
public:
    virtual ~ForwardModel() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual std::vector<std::string> parameter_names() const = 0;
    [[nodiscard]] std::size_t parameter_count() const { return parameter_names().size(); }

    [[nodiscard]] virtual Vector predict(const Vector& theta, const TestDefinition& test,
                                         const std::string& sensor_id) const = 0;

    // Rows = acquisitions, columns = parameters. Empty when not available.
    [[nodiscard]] virtual std::optional<Matrix> analytic_jacobian(const Vector& /*theta*/,
                                                                  const TestDefinition& /*test*/,
                                                                  const std::string& /*sensor_id*/) const {
        return std::nullopt;
    }
};

/// Three-parameter viscoelastic creep: theta = (E, Ev, tau).
/// A stress step d_sigma applied at t_s contributes
///   d_sigma/E + d_sigma/Ev * (1 - exp(-(t - t_s)/tau))   for t >= t_s.
class CreepModel final : public ForwardModel {
public:
    [[nodiscard]] std::string name() const override { return "creep3"; }
    [[nodiscard]] std::vector<std::string> parameter_names() const override { return {"E", "Ev", "tau"}; }
    [[nodiscard]] Vector predict(const Vector& theta, const TestDefinition& test,
                                 const std::string& sensor_id) const override;
    [[nodiscard]] std::optional<Matrix> analytic_jacobian(const Vector& theta, const TestDefinition& test,
                                                          const std::string& sensor_id) const override;
};

/// Four-parameter response with a deliberate identifiability gap, theta = (a, b, c, d):
///   "restricted" tests see (a*b)*t + c, so only the product a*b is identifiable and d is absent;
///   "redundant" tests see a*t^2 + b*t + c + d*sin(t).
class SloppyModel final : public ForwardModel {
public:
    [[nodiscard]] std::string name() const override { return "sloppy4"; }
    [[nodiscard]] std::vector<std::string> parameter_names() const override { return {"a", "b", "c", "d"}; }
    [[nodiscard]] Vector predict(const Vector& theta, const TestDefinition& test,
                                 const std::string& sensor_id) const override;
    [[nodiscard]] std::optional<Matrix> analytic_jacobian(const Vector& theta, const TestDefinition& test,
                                                          const std::string& sensor_id) const override;
};

/// Pins some parameters of a base model at fixed values and exposes the rest,
/// which is how one stage of a staged identification sees the model.
class FrozenParameterModel final : public ForwardModel {
public:
    FrozenParameterModel(std::shared_ptr<const ForwardModel> base, std::map<std::string, double> fixed);

    [[nodiscard]] std::string name() const override { return base_->name(); }
    [[nodiscard]] std::vector<std::string> parameter_names() const override { return free_names_; }
    [[nodiscard]] Vector predict(const Vector& theta, const TestDefinition& test,
                                 const std::string& sensor_id) const override;
    [[nodiscard]] std::optional<Matrix> analytic_jacobian(const Vector& theta, const TestDefinition& test,
                                                          const std::string& sensor_id) const override;

    [[nodiscard]] Vector expand(const Vector& free_theta) const;

private:
    std::shared_ptr<const ForwardModel> base_;
    std::vector<std::string> free_names_;
    std::vector<std::size_t> free_index_; // position of each free parameter in the base vector
    Vector template_;                     // base vector with fixed values filled in
};

/// Registered synthetic models: "creep3", "sloppy4".
[[nodiscard]] std::shared_ptr<const ForwardModel> make_model(const std::string& name,
                                                             const std::map<std::string, double>& fixed = {});

[[nodiscard]] std::vector<std::string> registered_models();

} // namespace hybrid_id
