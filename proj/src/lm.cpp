#include "hybrid_id/lm.hpp"

#include "hybrid_id/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hybrid_id {

namespace {

// Below this the damping no longer changes a unit-diagonal system in double
// precision; keeps repeated divisions from reaching exactly zero.
constexpr double kLambdaFloor = 1e-15;

} // namespace

void LmConfig::validate() const {
    if (!(lambda0 > 0.0) || !(lambda_max > 0.0) || !(fd_relative_step > 0.0) || !(cost_tol > 0.0) ||
        !(step_tol > 0.0) || max_iterations == 0) {
        throw ConfigError("lm: all settings must be positive");
    }
    if (!(lambda_up > 1.0) || !(lambda_down > 1.0)) {
        throw ConfigError("lm: lambda_up and lambda_down must exceed 1");
    }
}

std::string to_string(LmStop stop) {
    switch (stop) {
    case LmStop::CostTolerance: return "cost_tolerance";
    case LmStop::StepTolerance: return "step_tolerance";
    case LmStop::LambdaMax: return "lambda_max";
    case LmStop::MaxIterations: return "max_iterations";
    case LmStop::ExactFit: return "exact_fit";
    }
    return "unknown";
}

Matrix fd_jacobian(const ResidualFunction& residual_fn, const Vector& theta, const Vector& r0,
                   const ParameterSpace& space, double fd_relative_step) {
    if (static_cast<std::size_t>(theta.size()) != space.count()) {
        throw DimensionError("fd_jacobian: theta does not match the parameter space");
    }
    Matrix jac(r0.size(), theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double h = fd_relative_step * std::max(std::abs(theta[i]), 1e-3 * space.width(static_cast<std::size_t>(i)));
        Vector shifted = theta;
        shifted[i] = theta[i] + h > space.upper()[i] ? theta[i] - h : theta[i] + h;
        const double delta = shifted[i] - theta[i];
        Vector r1;
        try {
            r1 = residual_fn(shifted);
        } catch (const std::exception& e) {
            throw SolverError(std::string("fd_jacobian: residual evaluation failed: ") + e.what());
        }
        if (r1.size() != r0.size()) {
            throw DimensionError("fd_jacobian: residual length changed between evaluations");
        }
        jac.col(i) = (r1 - r0) / delta;
    }
    return jac;
}

Matrix fd_jacobian(const ResidualFunction& residual_fn, const Vector& theta, const ParameterSpace& space,
                   double fd_relative_step) {
    Vector r0;
    try {
        r0 = residual_fn(theta);
    } catch (const std::exception& e) {
        throw SolverError(std::string("fd_jacobian: residual evaluation failed: ") + e.what());
    }
    return fd_jacobian(residual_fn, theta, r0, space, fd_relative_step);
}

Vector normalized_step(const Vector& gradient, const Matrix& hessian, double lambda) {
    const Eigen::Index n = gradient.size();
    if (hessian.rows() != n || hessian.cols() != n) {
        throw DimensionError("normalized_step: hessian and gradient sizes disagree");
    }
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (hessian(i, i) > kFrozenDiagonal) {
            active.push_back(i);
        }
    }
    Vector step = Vector::Zero(n);
    if (active.empty()) {
        return step;
    }

    const auto m = static_cast<Eigen::Index>(active.size());
    Vector root(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        root[a] = std::sqrt(hessian(active[a], active[a]));
    }
    Matrix system(m, m);
    Vector rhs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        rhs[a] = -gradient[active[a]] / root[a];
        for (Eigen::Index b = 0; b < m; ++b) {
            system(a, b) = hessian(active[a], active[b]) / (root[a] * root[b]);
        }
        system(a, a) += lambda;
    }

    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) {
        throw SolverError("normalized_step: damped system is not positive definite");
    }
    const Vector d = llt.solve(rhs);
    if (!d.allFinite()) {
        throw SolverError("normalized_step: damped system is singular");
    }
    for (Eigen::Index a = 0; a < m; ++a) {
        step[active[a]] = d[a] / root[a];
    }
    return step;
}

LmResult run_lm(const ResidualFunction& residual_fn, const Vector& theta0, const ParameterSpace& space,
                const LmConfig& config) {
    config.validate();
    if (!space.contains(theta0)) {
        throw ConfigError("run_lm: start point lies outside the parameter bounds");
    }

    LmResult result;
    result.theta = theta0;
    Vector r;
    try {
        r = residual_fn(theta0);
        ++result.evaluations;
    } catch (const std::exception& e) {
        throw LmFailure(std::string("run_lm: residual evaluation failed at the start point: ") + e.what(), {});
    }
    result.cost = r.squaredNorm();
    if (!std::isfinite(result.cost)) {
        throw LmFailure("run_lm: non-finite cost at the start point", {});
    }
    double lambda = config.lambda0;
    result.trace.push_back({0, result.cost, lambda, 0.0, true});
    result.accepted_path.push_back(theta0);
    if (result.cost == 0.0) {
        result.stop = LmStop::ExactFit;
        return result;
    }

    std::size_t trial_index = 0;
    for (std::size_t iteration = 0; iteration < config.max_iterations; ++iteration) {
        Matrix jac;
        try {
            jac = fd_jacobian(residual_fn, result.theta, r, space, config.fd_relative_step);
        } catch (const SolverError& e) {
            throw LmFailure(e.what(), result.trace);
        }
        result.evaluations += static_cast<std::size_t>(jac.cols());
        const Vector gradient = jac.transpose() * r;
        const Matrix hessian = jac.transpose() * jac;

        bool accepted = false;
        std::size_t failed_trials = 0;
        std::size_t trials = 0;
        while (!accepted) {
            Vector step;
            try {
                step = normalized_step(gradient, hessian, lambda);
            } catch (const SolverError&) {
                lambda *= config.lambda_up;
                if (lambda > config.lambda_max) {
                    result.stop = LmStop::LambdaMax;
                    return result;
                }
                continue;
            }
            const Vector trial = clamp_to_bounds(result.theta + step, space);
            const double step_norm = (trial - result.theta).norm();
            // A step below tolerance is still tried once; whatever happens, we stop after it.
            const bool last = step_norm / std::max(result.theta.norm(), 1.0) < config.step_tol;

            ++trials;
            ++trial_index;
            double trial_cost = 0.0;
            Vector trial_r;
            try {
                trial_r = residual_fn(trial);
                ++result.evaluations;
                trial_cost = trial_r.squaredNorm();
                if (!std::isfinite(trial_cost)) {
                    throw EvaluationError("non-finite cost");
                }
            } catch (const std::exception&) {
                ++failed_trials;
                trial_cost = std::numeric_limits<double>::infinity();
            }

            if (trial_cost < result.cost) {
                const double relative_decrease = (result.cost - trial_cost) / result.cost;
                result.theta = trial;
                result.cost = trial_cost;
                r = std::move(trial_r);
                lambda = std::max(lambda / config.lambda_down, kLambdaFloor);
                ++result.accepted_steps;
                result.accepted_path.push_back(result.theta);
                result.trace.push_back({trial_index, result.cost, lambda, step_norm, true});
                accepted = true;
                if (result.cost == 0.0) {
                    result.stop = LmStop::ExactFit;
                    return result;
                }
                if (last) {
                    result.stop = LmStop::StepTolerance;
                    return result;
                }
                if (relative_decrease < config.cost_tol) {
                    result.stop = LmStop::CostTolerance;
                    return result;
                }
            } else {
                result.trace.push_back({trial_index, trial_cost, lambda, step_norm, false});
                if (last) {
                    result.stop = LmStop::StepTolerance;
                    return result;
                }
                lambda *= config.lambda_up;
                if (lambda > config.lambda_max) {
                    if (failed_trials == trials) {
                        throw LmFailure("run_lm: residual evaluation failed at every trial point", result.trace);
                    }
                    result.stop = LmStop::LambdaMax;
                    return result;
                }
            }
        }
    }
    result.stop = LmStop::MaxIterations;
    return result;
}

LmResult run_lm(const Objective& objective, const Vector& theta0, const ParameterSpace& space,
                const LmConfig& config) {
    if (space.count() != objective.parameter_count()) {
        throw DimensionError("run_lm: space has " + std::to_string(space.count()) + " parameters, model expects " +
                             std::to_string(objective.parameter_count()));
    }
    return run_lm([&objective](const Vector& theta) { return objective.residuals(theta); }, theta0, space, config);
}

} // namespace hybrid_id
