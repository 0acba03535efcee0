#pragma once

#include "hybrid_id/errors.hpp"
#include "hybrid_id/model.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace hybrid_id {

class Objective;

/// Residual vector r(theta); the least-squares cost is r.squaredNorm().
using ResidualFunction = std::function<Vector(const Vector&)>;

struct LmConfig {
    double lambda0 = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    double lambda_max = 1e10;
    std::size_t max_iterations = 200;
    double fd_relative_step = 1e-6;
    double cost_tol = 1e-12;
    double step_tol = 1e-10;

    void validate() const;
};

/// Hessian diagonals at or below this are treated as zero and frozen.
inline constexpr double kFrozenDiagonal = 1e-30;

/// Forward differences, step h_i = rel * max(|theta_i|, 1e-3 * width_i);
/// backward when theta_i + h_i would leave the box.
[[nodiscard]] Matrix fd_jacobian(const ResidualFunction& residual_fn, const Vector& theta, const ParameterSpace& space,
                                 double fd_relative_step);

/// Same, reusing an already computed r(theta).
[[nodiscard]] Matrix fd_jacobian(const ResidualFunction& residual_fn, const Vector& theta, const Vector& r0,
                                 const ParameterSpace& space, double fd_relative_step);

/// Solves the damped Gauss-Newton system after scaling H to unit diagonal:
///   (Hn + lambda I) d = -gn,  gn_i = g_i / sqrt(H_ii),  Hn_ij = H_ij / sqrt(H_ii H_jj),
/// and returns d_i / sqrt(H_ii). Coordinates with H_ii <= 1e-30 get a zero step.
[[nodiscard]] Vector normalized_step(const Vector& gradient, const Matrix& hessian, double lambda);

enum class LmStop { CostTolerance, StepTolerance, LambdaMax, MaxIterations, ExactFit };

[[nodiscard]] std::string to_string(LmStop stop);

struct LmIterate {
    std::size_t iteration = 0;
    double cost = 0.0;
    double lambda = 0.0;
    double step_norm = 0.0; // norm of the last accepted step (0 for the start point)
    bool accepted = false;
};

struct LmResult {
    Vector theta;
    double cost = 0.0;
    std::size_t accepted_steps = 0;
    std::size_t evaluations = 0;
    LmStop stop = LmStop::MaxIterations;
    std::vector<LmIterate> trace;      // one entry per trial point, plus the start
    std::vector<Vector> accepted_path; // theta after each accepted step, starting with theta0
};

/// Thrown when the residual cannot be evaluated; carries the partial trace.
struct LmFailure : SolverError {
    LmFailure(const std::string& what, std::vector<LmIterate> partial) : SolverError(what), trace(std::move(partial)) {}
    std::vector<LmIterate> trace;
};

[[nodiscard]] LmResult run_lm(const ResidualFunction& residual_fn, const Vector& theta0, const ParameterSpace& space,
                              const LmConfig& config);
[[nodiscard]] LmResult run_lm(const Objective& objective, const Vector& theta0, const ParameterSpace& space,
                              const LmConfig& config);

} // namespace hybrid_id
