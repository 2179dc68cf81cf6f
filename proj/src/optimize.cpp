#include "gpd/optimize.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gpd/errors.hpp"

namespace gpd {

namespace {

bool finite(const Objective& o) { return std::isfinite(o.value) && o.gradient.allFinite(); }

}  // namespace

MinimizerResult minimize_bfgs(const ObjectiveFn& fn, Eigen::VectorXd x0,
                              const MinimizerOptions& options) {
    constexpr double kArmijo = 1e-4;
    constexpr int kMaxBacktracks = 40;
    constexpr double kMaxStep = 3.0;  // in log-parameter units

    MinimizerResult result;
    result.x = std::move(x0);
    Objective current = fn(result.x);
    result.evaluations = 1;
    if (!finite(current)) throw NumericalError("objective is not finite at the starting point");

    const Eigen::Index dim = result.x.size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);
    bool fresh_hessian = true;

    for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
        const double gnorm = current.gradient.norm();
        if (gnorm < options.gradient_tolerance) {
            result.converged = true;
            break;
        }
        Eigen::VectorXd direction = -H * current.gradient;
        double slope = direction.dot(current.gradient);
        if (!(slope < 0.0)) {
            H.setIdentity();
            fresh_hessian = true;
            direction = -current.gradient;
            slope = -gnorm * gnorm;
        }
        const double dnorm = direction.norm();
        double step = dnorm > kMaxStep ? kMaxStep / dnorm : 1.0;

        Objective trial;
        Eigen::VectorXd x_trial;
        bool accepted = false;
        for (int bt = 0; bt < kMaxBacktracks; ++bt, step *= 0.5) {
            x_trial = result.x + step * direction;
            try {
                trial = fn(x_trial);
            } catch (const NumericalError&) {
                trial = {std::numeric_limits<double>::infinity(), current.gradient};
            }
            ++result.evaluations;
            if (finite(trial) && trial.value <= current.value + kArmijo * step * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (fresh_hessian) break;  // steepest descent cannot improve either
            H.setIdentity();
            fresh_hessian = true;
            continue;
        }

        const Eigen::VectorXd s = x_trial - result.x;
        const Eigen::VectorXd y = trial.gradient - current.gradient;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (fresh_hessian) {
                // Scale the initial inverse Hessian before the first update.
                H *= sy / y.squaredNorm();
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
            H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
                rho * s * s.transpose();
            fresh_hessian = false;
        }
        const double decrease = current.value - trial.value;
        result.x = x_trial;
        current = std::move(trial);
        if (decrease <= options.function_tolerance * (std::abs(current.value) + 1.0)) {
            result.stalled = true;
            break;
        }
    }

    result.value = current.value;
    result.gradient_norm = current.gradient.norm();
    if (result.gradient_norm < options.gradient_tolerance) result.converged = true;
    return result;
}

RestartResult minimize_with_restarts(const ObjectiveFn& fn,
                                     const std::vector<Eigen::VectorXd>& starts,
                                     const MinimizerOptions& options) {
    RestartResult out;
    bool have = false;
    std::string failures;
    for (std::size_t r = 0; r < starts.size(); ++r) {
        try {
            MinimizerResult res = minimize_bfgs(fn, starts[r], options);
            out.total_evaluations += res.evaluations;
            ++out.succeeded;
            if (!have || res.value < out.best.value) {
                out.best = std::move(res);
                out.best_index = r;
                have = true;
            }
        } catch (const std::exception& e) {
            failures += "\n  restart " + std::to_string(r) + ": " + e.what();
        }
    }
    if (!have) throw ModelError("every optimizer restart failed" + failures);
    return out;
}

}  // namespace gpd
