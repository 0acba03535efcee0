#include "hybrid_id/model.hpp"

#include "hybrid_id/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hybrid_id {

ParameterSpace::ParameterSpace(std::vector<std::string> names, Vector lower, Vector upper)
    : names_(std::move(names)), lower_(std::move(lower)), upper_(std::move(upper)) {
    if (static_cast<std::size_t>(lower_.size()) != names_.size() ||
        static_cast<std::size_t>(upper_.size()) != names_.size()) {
        throw DimensionError("parameter space: names, lower and upper must have equal length");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (!seen.insert(names_[i]).second) {
            throw ConfigError("parameter space: duplicate parameter '" + names_[i] + "'");
        }
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
            throw ConfigError("parameter space: need lower < upper for '" + names_[i] + "'");
        }
    }
}

std::size_t ParameterSpace::index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        throw LookupError("unknown parameter '" + name + "'");
    }
    return static_cast<std::size_t>(it - names_.begin());
}

bool ParameterSpace::contains(const Vector& theta) const {
    if (static_cast<std::size_t>(theta.size()) != count()) {
        return false;
    }
    return ((theta.array() >= lower_.array()) && (theta.array() <= upper_.array())).all();
}

bool ParameterSpace::nested_in(const ParameterSpace& outer) const {
    return names_ == outer.names_ && (lower_.array() >= outer.lower_.array()).all() &&
           (upper_.array() <= outer.upper_.array()).all();
}

Vector clamp_to_bounds(const Vector& theta, const ParameterSpace& space) {
    if (static_cast<std::size_t>(theta.size()) != space.count()) {
        throw DimensionError("clamp_to_bounds: vector has " + std::to_string(theta.size()) +
                             " components, space has " + std::to_string(space.count()));
    }
    return theta.cwiseMax(space.lower()).cwiseMin(space.upper());
}

TestDefinition::TestDefinition(std::string id, std::vector<SensorDefinition> sensors, Loading loading)
    : id_(std::move(id)), sensors_(std::move(sensors)), loading_(std::move(loading)) {
    if (sensors_.empty()) {
        throw ValidationError("test '" + id_ + "' has no sensors");
    }
    std::set<std::string> seen;
    for (const auto& s : sensors_) {
        if (!seen.insert(s.id).second) {
            throw ValidationError("test '" + id_ + "': duplicate sensor '" + s.id + "'");
        }
        if (s.times.size() < 2) {
            throw ValidationError("test '" + id_ + "', sensor '" + s.id + "': need at least 2 acquisitions");
        }
        for (std::size_t i = 1; i < s.times.size(); ++i) {
            if (!(s.times[i] > s.times[i - 1])) {
                throw ValidationError("test '" + id_ + "', sensor '" + s.id +
                                      "': times not strictly increasing at index " + std::to_string(i));
            }
        }
    }
    for (std::size_t i = 1; i < loading_.steps.size(); ++i) {
        if (!(loading_.steps[i].time > loading_.steps[i - 1].time)) {
            throw ValidationError("test '" + id_ + "': load steps must have increasing times");
        }
    }
}

const SensorDefinition& TestDefinition::sensor(const std::string& sensor_id) const {
    for (const auto& s : sensors_) {
        if (s.id == sensor_id) {
            return s;
        }
    }
    throw LookupError("test '" + id_ + "' has no sensor '" + sensor_id + "'");
}

ExperimentSet::ExperimentSet(std::vector<Experiment> experiments) : experiments_(std::move(experiments)) {
    std::set<std::string> ids;
    for (const auto& e : experiments_) {
        if (!ids.insert(e.test.id()).second) {
            throw DatasetError("duplicate test '" + e.test.id() + "'");
        }
        for (const auto& sensor : e.test.sensors()) {
            auto it = std::find_if(e.series.begin(), e.series.end(),
                                   [&](const MeasurementSeries& m) { return m.sensor_id == sensor.id; });
            if (it == e.series.end()) {
                throw DatasetError("test '" + e.test.id() + "': no measurements for sensor '" + sensor.id + "'");
            }
            if (it->values.size() != sensor.times.size()) {
                throw DimensionError("test '" + e.test.id() + "', sensor '" + sensor.id + "': " +
                                     std::to_string(it->values.size()) + " values for " +
                                     std::to_string(sensor.times.size()) + " acquisition times");
            }
            if (std::all_of(it->values.begin(), it->values.end(), [](double v) { return v == 0.0; })) {
                throw DegenerateWeightError("test '" + e.test.id() + "', sensor '" + sensor.id +
                                            "': all measurements are zero, weight undefined");
            }
        }
        if (e.series.size() != e.test.sensors().size()) {
            throw DatasetError("test '" + e.test.id() + "': measurement series for an undeclared sensor");
        }
    }
}

const MeasurementSeries& ExperimentSet::series(const std::string& test_id, const std::string& sensor_id) const {
    for (const auto& e : experiments_) {
        if (e.test.id() != test_id) {
            continue;
        }
        for (const auto& s : e.series) {
            if (s.sensor_id == sensor_id) {
                return s;
            }
        }
        throw DatasetError("test '" + test_id + "' has no series for sensor '" + sensor_id + "'");
    }
    throw DatasetError("no test '" + test_id + "' in dataset");
}

ExperimentSet ExperimentSet::subset(const std::vector<std::string>& test_ids) const {
    std::vector<Experiment> kept;
    for (const auto& id : test_ids) {
        auto it = std::find_if(experiments_.begin(), experiments_.end(),
                               [&](const Experiment& e) { return e.test.id() == id; });
        if (it == experiments_.end()) {
            throw DatasetError("no test '" + id + "' in dataset");
        }
        kept.push_back(*it);
    }
    return ExperimentSet(std::move(kept));
}

namespace {

void require_size(const Vector& theta, std::size_t n, const std::string& model) {
    if (static_cast<std::size_t>(theta.size()) != n) {
        throw DimensionError(model + ": expected " + std::to_string(n) + " parameters, got " +
                             std::to_string(theta.size()));
    }
}

} // namespace

Vector CreepModel::predict(const Vector& theta, const TestDefinition& test, const std::string& sensor_id) const {
    require_size(theta, 3, name());
    const double E = theta[0];
    const double Ev = theta[1];
    const double tau = theta[2];
    if (!(E > 0.0) || !(Ev > 0.0) || !(tau > 0.0)) {
        throw DomainError("creep3: E, Ev and tau must be positive");
    }
    const auto& sensor = test.sensor(sensor_id);
    const auto& steps = test.loading().steps;
    if (steps.empty()) {
        throw ConfigError("creep3: test '" + test.id() + "' has no load steps");
    }

    Vector strain = Vector::Zero(static_cast<Eigen::Index>(sensor.times.size()));
    double previous = 0.0;
    for (const auto& step : steps) {
        const double increment = step.stress - previous;
        previous = step.stress;
        for (std::size_t i = 0; i < sensor.times.size(); ++i) {
            const double elapsed = sensor.times[i] - step.time;
            if (elapsed < 0.0) {
                continue;
            }
            strain[static_cast<Eigen::Index>(i)] +=
                increment / E + increment / Ev * -std::expm1(-elapsed / tau);
        }
    }
    return sensor.gain * strain;
}

std::optional<Matrix> CreepModel::analytic_jacobian(const Vector& theta, const TestDefinition& test,
                                                    const std::string& sensor_id) const {
    require_size(theta, 3, name());
    const double E = theta[0];
    const double Ev = theta[1];
    const double tau = theta[2];
    if (!(E > 0.0) || !(Ev > 0.0) || !(tau > 0.0)) {
        throw DomainError("creep3: E, Ev and tau must be positive");
    }
    const auto& sensor = test.sensor(sensor_id);
    Matrix jac = Matrix::Zero(static_cast<Eigen::Index>(sensor.times.size()), 3);
    double previous = 0.0;
    for (const auto& step : test.loading().steps) {
        const double increment = step.stress - previous;
        previous = step.stress;
        for (std::size_t i = 0; i < sensor.times.size(); ++i) {
            const double elapsed = sensor.times[i] - step.time;
            if (elapsed < 0.0) {
                continue;
            }
            const auto row = static_cast<Eigen::Index>(i);
            const double decay = std::exp(-elapsed / tau);
            jac(row, 0) += -increment / (E * E);
            jac(row, 1) += -increment / (Ev * Ev) * (1.0 - decay);
            jac(row, 2) += -increment / Ev * decay * elapsed / (tau * tau);
        }
    }
    return sensor.gain * jac;
}

namespace {

enum class SloppyKind { Restricted, Redundant };

SloppyKind sloppy_kind(const TestDefinition& test) {
    const auto& kind = test.loading().kind;
    if (kind == "restricted") {
        return SloppyKind::Restricted;
    }
    if (kind == "redundant") {
        return SloppyKind::Redundant;
    }
    throw ConfigError("sloppy4: test '" + test.id() + "' has unknown kind '" + kind +
                      "' (expected restricted or redundant)");
}

} // namespace

Vector SloppyModel::predict(const Vector& theta, const TestDefinition& test, const std::string& sensor_id) const {
    require_size(theta, 4, name());
    const auto kind = sloppy_kind(test);
    const auto& sensor = test.sensor(sensor_id);
    const double a = theta[0];
    const double b = theta[1];
    const double c = theta[2];
    const double d = theta[3];

    Vector out(static_cast<Eigen::Index>(sensor.times.size()));
    for (std::size_t i = 0; i < sensor.times.size(); ++i) {
        const double t = sensor.times[i];
        out[static_cast<Eigen::Index>(i)] =
            kind == SloppyKind::Restricted ? (a * b) * t + c : a * t * t + b * t + c + d * std::sin(t);
    }
    return sensor.gain * out;
}

std::optional<Matrix> SloppyModel::analytic_jacobian(const Vector& theta, const TestDefinition& test,
                                                     const std::string& sensor_id) const {
    require_size(theta, 4, name());
    const auto kind = sloppy_kind(test);
    const auto& sensor = test.sensor(sensor_id);
    Matrix jac = Matrix::Zero(static_cast<Eigen::Index>(sensor.times.size()), 4);
    for (std::size_t i = 0; i < sensor.times.size(); ++i) {
        const double t = sensor.times[i];
        const auto row = static_cast<Eigen::Index>(i);
        if (kind == SloppyKind::Restricted) {
            jac(row, 0) = theta[1] * t;
            jac(row, 1) = theta[0] * t;
            jac(row, 2) = 1.0;
        } else {
            jac(row, 0) = t * t;
            jac(row, 1) = t;
            jac(row, 2) = 1.0;
            jac(row, 3) = std::sin(t);
        }
    }
    return sensor.gain * jac;
}

FrozenParameterModel::FrozenParameterModel(std::shared_ptr<const ForwardModel> base,
                                           std::map<std::string, double> fixed)
    : base_(std::move(base)) {
    const auto names = base_->parameter_names();
    template_ = Vector::Zero(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto it = fixed.find(names[i]);
        if (it == fixed.end()) {
            free_names_.push_back(names[i]);
            free_index_.push_back(i);
        } else {
            template_[static_cast<Eigen::Index>(i)] = it->second;
            fixed.erase(it);
        }
    }
    if (!fixed.empty()) {
        throw ConfigError("model '" + base_->name() + "' has no parameter '" + fixed.begin()->first + "'");
    }
    if (free_names_.empty()) {
        throw ConfigError("model '" + base_->name() + "': every parameter is fixed, nothing to identify");
    }
}

Vector FrozenParameterModel::expand(const Vector& free_theta) const {
    require_size(free_theta, free_index_.size(), name());
    Vector full = template_;
    for (std::size_t i = 0; i < free_index_.size(); ++i) {
        full[static_cast<Eigen::Index>(free_index_[i])] = free_theta[static_cast<Eigen::Index>(i)];
    }
    return full;
}

Vector FrozenParameterModel::predict(const Vector& theta, const TestDefinition& test,
                                     const std::string& sensor_id) const {
    return base_->predict(expand(theta), test, sensor_id);
}

std::optional<Matrix> FrozenParameterModel::analytic_jacobian(const Vector& theta, const TestDefinition& test,
                                                              const std::string& sensor_id) const {
    auto full = base_->analytic_jacobian(expand(theta), test, sensor_id);
    if (!full) {
        return std::nullopt;
    }
    Matrix reduced(full->rows(), static_cast<Eigen::Index>(free_index_.size()));
    for (std::size_t i = 0; i < free_index_.size(); ++i) {
        reduced.col(static_cast<Eigen::Index>(i)) = full->col(static_cast<Eigen::Index>(free_index_[i]));
    }
    return reduced;
}

std::vector<std::string> registered_models() { return {"creep3", "sloppy4"}; }

std::shared_ptr<const ForwardModel> make_model(const std::string& name, const std::map<std::string, double>& fixed) {
    std::shared_ptr<const ForwardModel> model;
    if (name == "creep3") {
        model = std::make_shared<CreepModel>();
    } else if (name == "sloppy4") {
        model = std::make_shared<SloppyModel>();
    } else {
        throw ConfigError("unknown model '" + name + "' (registered: creep3, sloppy4)");
    }
    if (fixed.empty()) {
        return model;
    }
    return std::make_shared<FrozenParameterModel>(model, fixed);
}

} // namespace hybrid_id
