#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace gpd {

struct Objective {
    double value;
    Eigen::VectorXd gradient;
};

using ObjectiveFn = std::function<Objective(const Eigen::VectorXd&)>;

struct MinimizerOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-5;
    /// Stop once an accepted step lowers the objective by less than this
    /// fraction of |f| + 1 (progress below rounding level).
    double function_tolerance = 1e-12;
};

struct MinimizerResult {
    Eigen::VectorXd x;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;  // gradient norm below tolerance
    bool stalled = false;    // stopped on the function tolerance
};

/// BFGS with Armijo backtracking. Non-finite trial values are treated as
/// failed steps. The starting point must evaluate to a finite objective.
[[nodiscard]] MinimizerResult minimize_bfgs(const ObjectiveFn& fn, Eigen::VectorXd x0,
                                            const MinimizerOptions& options = {});

struct RestartResult {
    MinimizerResult best;
    std::size_t best_index = 0;
    int succeeded = 0;
    int total_evaluations = 0;
};

/// Runs the minimizer from every starting point and keeps the lowest value
/// (ties go to the earliest start). Starts that throw are skipped; if all of
/// them do, ModelError carries the collected messages.
[[nodiscard]] RestartResult minimize_with_restarts(const ObjectiveFn& fn,
                                                   const std::vector<Eigen::VectorXd>& starts,
                                                   const MinimizerOptions& options);

}  // namespace gpd
