#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gpd/errors.hpp"
#include "gpd/gp_exact.hpp"
#include "gpd/optimize.hpp"

namespace {

gpd::Objective quadratic(const Eigen::VectorXd& x) {
    Eigen::VectorXd c(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) c(i) = 0.5 * static_cast<double>(i + 1);
    const Eigen::VectorXd d = x - c;
    Eigen::VectorXd w(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) w(i) = static_cast<double>(i + 1);
    return {0.5 * d.dot(w.asDiagonal() * d), w.asDiagonal() * d};
}

gpd::Objective rosenbrock(const Eigen::VectorXd& x) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    Eigen::VectorXd g(2);
    g << -2.0 * a - 400.0 * x(0) * b, 200.0 * b;
    return {a * a + 100.0 * b * b, g};
}

}  // namespace

TEST_CASE("bfgs minimizes a quadratic") {
    const auto r = gpd::minimize_bfgs(quadratic, Eigen::VectorXd::Zero(3));
    CHECK(r.converged);
    CHECK(r.x(0) == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(r.x(2) == doctest::Approx(1.5).epsilon(1e-5));
    CHECK(r.gradient_norm < 1e-5);
}

TEST_CASE("bfgs minimizes rosenbrock") {
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    gpd::MinimizerOptions opt;
    opt.max_iterations = 500;
    opt.function_tolerance = 0.0;
    const auto r = gpd::minimize_bfgs(rosenbrock, x0, opt);
    CHECK(r.converged);
    CHECK(std::abs(r.x(0) - 1.0) < 1e-4);
    CHECK(std::abs(r.x(1) - 1.0) < 1e-4);
}

TEST_CASE("bfgs never increases the objective") {
    Eigen::VectorXd x0(2);
    x0 << 3.0, -2.0;
    const double f0 = rosenbrock(x0).value;
    for (int it : {1, 2, 5, 20}) {
        gpd::MinimizerOptions opt;
        opt.max_iterations = it;
        CHECK(gpd::minimize_bfgs(rosenbrock, x0, opt).value <= f0);
    }
}

TEST_CASE("bfgs at a stationary start returns it") {
    Eigen::VectorXd x0(3);
    x0 << 0.5, 1.0, 1.5;
    const auto r = gpd::minimize_bfgs(quadratic, x0);
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.x == x0);
}

TEST_CASE("bfgs treats non-finite trial values as failed steps") {
    // log barrier at x <= 0: every overshoot is infinite.
    auto fn = [](const Eigen::VectorXd& x) -> gpd::Objective {
        if (x(0) <= 0.0) return {std::numeric_limits<double>::infinity(), Eigen::VectorXd::Zero(1)};
        Eigen::VectorXd g(1);
        g << 1.0 - 1.0 / x(0);
        return {x(0) - std::log(x(0)), g};
    };
    Eigen::VectorXd x0(1);
    x0 << 5.0;
    const auto r = gpd::minimize_bfgs(fn, x0);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("bfgs rejects a non-finite start") {
    auto fn = [](const Eigen::VectorXd&) -> gpd::Objective {
        return {std::nan(""), Eigen::VectorXd::Zero(1)};
    };
    CHECK_THROWS_AS((void)gpd::minimize_bfgs(fn, Eigen::VectorXd::Zero(1)), gpd::NumericalError);
}

TEST_CASE("restarts keep the lowest value and skip failures") {
    // Two basins: (x^2 - 1)^2 + 0.3 x has its global minimum near x = -1.
    auto fn = [](const Eigen::VectorXd& x) -> gpd::Objective {
        if (x(0) > 10.0) throw gpd::NumericalError("out of range");
        const double v = x(0);
        Eigen::VectorXd g(1);
        g << 4.0 * v * (v * v - 1.0) + 0.3;
        return {(v * v - 1.0) * (v * v - 1.0) + 0.3 * v, g};
    };
    std::vector<Eigen::VectorXd> starts(3, Eigen::VectorXd(1));
    starts[0] << 0.9;
    starts[1] << 20.0;
    starts[2] << -0.8;
    const auto r = gpd::minimize_with_restarts(fn, starts, {});
    CHECK(r.succeeded == 2);
    CHECK(r.best_index == 2);
    CHECK(r.best.x(0) < 0.0);

    std::vector<Eigen::VectorXd> bad(2, Eigen::VectorXd::Constant(1, 50.0));
    CHECK_THROWS_AS((void)gpd::minimize_with_restarts(fn, bad, {}), gpd::ModelError);
}

TEST_CASE("restart points stay in their boxes") {
    gpd::OptimizerConfig cfg;
    cfg.restarts = 50;
    cfg.seed = 9;
    Eigen::VectorXd init(3);
    init << 0.2, -0.4, std::log(0.1);
    const double med = 2.0;
    const auto starts = gpd::restart_points(init, med, cfg);
    REQUIRE(starts.size() == 50);
    CHECK(starts[0] == init);
    for (std::size_t r = 1; r < starts.size(); ++r) {
        CHECK(starts[r](0) >= std::log(0.1));
        CHECK(starts[r](0) <= std::log(10.0));
        CHECK(starts[r](1) >= std::log(0.1 * med));
        CHECK(starts[r](1) <= std::log(10.0 * med));
        CHECK(starts[r](2) >= std::log(1e-3));
        CHECK(starts[r](2) <= 0.0);
    }
    CHECK(gpd::restart_points(init, med, cfg)[7] == starts[7]);
    cfg.restarts = 0;
    CHECK_THROWS_AS((void)gpd::restart_points(init, med, cfg), gpd::InputError);
}

TEST_CASE("lengthscale floor keeps the optimum above the bound") {
    // Unconstrained minimum at log l = -3; floor at log l = -1.
    auto fn = [](const Eigen::VectorXd& t) -> gpd::Objective {
        Eigen::VectorXd g(2);
        g << 2.0 * (t(0) - 0.5), 2.0 * (t(1) + 3.0);
        return {(t(0) - 0.5) * (t(0) - 0.5) + (t(1) + 3.0) * (t(1) + 3.0), g};
    };
    gpd::OptimizerConfig cfg;
    const std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Zero(2)};
    const auto floored = gpd::minimize_kernel_objective(fn, starts, -1.0, cfg);
    CHECK(floored.best.x(1) >= -1.0);
    CHECK(floored.best.x(1) < -0.9);
    CHECK(floored.best.x(0) == doctest::Approx(0.5).epsilon(1e-4));

    const auto free = gpd::minimize_kernel_objective(fn, starts, -std::numeric_limits<double>::infinity(), cfg);
    CHECK(free.best.x(1) == doctest::Approx(-3.0).epsilon(1e-5));

    // An interior optimum is unaffected by the floor.
    const auto interior = gpd::minimize_kernel_objective(fn, starts, -6.0, cfg);
    CHECK(interior.best.x(1) == doctest::Approx(-3.0).epsilon(1e-4));
}

TEST_CASE("lengthscale log floor") {
    Eigen::MatrixXd X(3, 1);
    X << 0.0, 1.0, 3.0;
    gpd::OptimizerConfig cfg;
    CHECK(gpd::lengthscale_log_floor(X, cfg) == doctest::Approx(std::log(0.2)));
    cfg.min_lengthscale_factor = 0.0;
    CHECK(std::isinf(gpd::lengthscale_log_floor(X, cfg)));
    cfg.min_lengthscale_factor = -1.0;
    CHECK_THROWS_AS((void)gpd::lengthscale_log_floor(X, cfg), gpd::InputError);
}
