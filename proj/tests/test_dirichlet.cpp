#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "gpd/dirichlet.hpp"
#include "gpd/errors.hpp"

using gpd::AlphaEpsilon;

TEST_CASE("AlphaEpsilon range") {
    CHECK_NOTHROW(AlphaEpsilon{1e-8});
    CHECK_NOTHROW(AlphaEpsilon{0.999});
    CHECK_THROWS_AS(AlphaEpsilon{0.0}, gpd::InputError);
    CHECK_THROWS_AS(AlphaEpsilon{1.0}, gpd::InputError);
    CHECK_THROWS_AS(AlphaEpsilon{-0.1}, gpd::InputError);
    CHECK_THROWS_AS(AlphaEpsilon{std::nan("")}, gpd::InputError);
}

TEST_CASE("one_hot examples") {
    const std::vector<int> a{0};
    const Eigen::MatrixXd A = gpd::one_hot(a, 2);
    CHECK(A.rows() == 1);
    CHECK(A(0, 0) == 1.0);
    CHECK(A(0, 1) == 0.0);

    const std::vector<int> b{1, 0};
    const Eigen::MatrixXd B = gpd::one_hot(b, 2);
    CHECK(B(0, 0) == 0.0);
    CHECK(B(0, 1) == 1.0);
    CHECK(B(1, 0) == 1.0);
    CHECK(B(1, 1) == 0.0);

    const std::vector<int> c{2};
    const Eigen::MatrixXd Cm = gpd::one_hot(c, 3);
    CHECK(Cm(0, 2) == 1.0);
    CHECK(Cm.sum() == 1.0);

    const std::vector<int> bad{3};
    CHECK_THROWS_AS((void)gpd::one_hot(bad, 3), gpd::InputError);
    const std::vector<int> neg{-1};
    CHECK_THROWS_AS((void)gpd::one_hot(neg, 3), gpd::InputError);
}

TEST_CASE("transform small pseudo-count limit") {
    const std::vector<int> labels{1};
    const auto t = gpd::transform(gpd::one_hot(labels, 2), AlphaEpsilon{1e-8});
    CHECK(std::abs(t.sigma2_tilde(0, 1) - std::log(2.0)) < 1e-6);
    CHECK(std::abs(t.y_tilde(0, 1) - std::log(1.0 / std::sqrt(2.0))) < 1e-6);
}

TEST_CASE("transform at alpha_eps 0.01") {
    // Reference values from 30-digit arithmetic.
    const std::vector<int> labels{0};
    const auto t = gpd::transform(gpd::one_hot(labels, 2), AlphaEpsilon{0.01});
    CHECK(t.sigma2_tilde(0, 0) == doctest::Approx(0.688184391217816300).epsilon(1e-12));
    CHECK(t.y_tilde(0, 0) == doctest::Approx(-0.334141864755740067).epsilon(1e-12));
    CHECK(t.sigma2_tilde(0, 1) == doctest::Approx(4.61512051684125945).epsilon(1e-12));
    CHECK(t.y_tilde(0, 1) == doctest::Approx(-6.91273044440872109).epsilon(1e-12));
    CHECK(t.num_classes == 2);
    CHECK(t.alpha_eps == AlphaEpsilon{0.01});
}

TEST_CASE("transform rejects non one-hot rows") {
    Eigen::MatrixXd Y(2, 2);
    Y << 1, 0, 1, 1;
    CHECK_THROWS_AS((void)gpd::transform(Y, AlphaEpsilon{0.1}), gpd::InputError);
    Y << 1, 0, 0.5, 0.5;
    CHECK_THROWS_AS((void)gpd::transform(Y, AlphaEpsilon{0.1}), gpd::InputError);
    Y << 1, 0, 0, 0;
    CHECK_THROWS_AS((void)gpd::transform(Y, AlphaEpsilon{0.1}), gpd::InputError);
    Eigen::MatrixXd single(1, 1);
    single << 1;
    CHECK_THROWS_AS((void)gpd::transform(single, AlphaEpsilon{0.1}), gpd::InputError);
}

TEST_CASE("transform rows hold exactly two value pairs") {
    const std::vector<int> labels{0, 2, 1, 2, 0, 1, 1};
    const auto t = gpd::transform(gpd::one_hot(labels, 3), AlphaEpsilon{0.05});
    std::set<std::pair<double, double>> all;
    for (Eigen::Index i = 0; i < t.y_tilde.rows(); ++i) {
        std::set<std::pair<double, double>> row;
        for (Eigen::Index c = 0; c < 3; ++c) {
            CHECK(t.sigma2_tilde(i, c) > 0.0);
            row.insert({t.y_tilde(i, c), t.sigma2_tilde(i, c)});
            all.insert({t.y_tilde(i, c), t.sigma2_tilde(i, c)});
        }
        CHECK(row.size() == 2);
        const int obs = labels[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < 3; ++c) {
            if (c == obs) continue;
            CHECK(t.y_tilde(i, obs) > t.y_tilde(i, c));
            CHECK(t.sigma2_tilde(i, obs) < t.sigma2_tilde(i, c));
        }
    }
    CHECK(all.size() == 2);
}

TEST_CASE("log-normal moment match is exact") {
    for (double a : {0.001, 0.01, 0.1, 1.01, 1.1, 5.0}) {
        const auto m = gpd::lognormal_match(a);
        const double mean = std::exp(m.y_tilde + 0.5 * m.sigma2_tilde);
        const double var = std::expm1(m.sigma2_tilde) * std::exp(2.0 * m.y_tilde + m.sigma2_tilde);
        CHECK(std::abs(mean - a) / a <= 1e-12);
        CHECK(std::abs(var - a) / a <= 1e-12);
    }
}

TEST_CASE("transform monotonicity") {
    double prev_s2 = INFINITY, prev_y = -INFINITY;
    for (double a = 1e-4; a < 3.0; a *= 1.3) {
        const auto m = gpd::lognormal_match(a);
        CHECK(m.sigma2_tilde < prev_s2);
        CHECK(m.y_tilde > prev_y);
        prev_s2 = m.sigma2_tilde;
        prev_y = m.y_tilde;
    }
    double prev_gap = -INFINITY, prev_unobs = -INFINITY;
    for (double eps : {0.5, 0.1, 0.05, 0.01, 0.001, 1e-6}) {
        const auto obs = gpd::lognormal_match(1.0 + eps);
        const auto un = gpd::lognormal_match(eps);
        CHECK(obs.y_tilde - un.y_tilde > prev_gap);
        CHECK(un.sigma2_tilde > prev_unobs);
        prev_gap = obs.y_tilde - un.y_tilde;
        prev_unobs = un.sigma2_tilde;
    }
}

TEST_CASE("select_alpha_eps") {
    const auto grid = gpd::default_alpha_grid();
    REQUIRE(grid.size() == 3);
    CHECK(grid[0].value() == 0.1);
    CHECK(grid[1].value() == 0.01);
    CHECK(grid[2].value() == 0.001);

    SUBCASE("single element") {
        const std::vector<AlphaEpsilon> one{AlphaEpsilon{0.3}};
        const auto s = gpd::select_alpha_eps(one, [](AlphaEpsilon, std::size_t) { return 7.0; });
        CHECK(s.best.value() == 0.3);
        CHECK(s.scores == std::vector<double>{7.0});
    }
    SUBCASE("lowest score wins") {
        const auto s = gpd::select_alpha_eps(grid, [](AlphaEpsilon a, std::size_t) {
            return std::abs(std::log10(a.value()) + 2.0);
        });
        CHECK(s.best.value() == 0.01);
    }
    SUBCASE("ties go to the larger value") {
        const std::vector<AlphaEpsilon> g{AlphaEpsilon{0.001}, AlphaEpsilon{0.1}, AlphaEpsilon{0.01}};
        const auto s = gpd::select_alpha_eps(g, [](AlphaEpsilon, std::size_t) { return 1.0; });
        CHECK(s.best.value() == 0.1);
    }
    SUBCASE("failed points are skipped") {
        const auto s = gpd::select_alpha_eps(grid, [](AlphaEpsilon a, std::size_t i) -> double {
            if (i == 0) throw gpd::NumericalError("boom");
            return a.value();
        });
        CHECK(std::isnan(s.scores[0]));
        CHECK(s.best.value() == 0.001);
    }
    SUBCASE("all failures raise") {
        CHECK_THROWS_AS((void)gpd::select_alpha_eps(grid,
                                                    [](AlphaEpsilon, std::size_t) -> double {
                                                        throw gpd::ModelError("no");
                                                    }),
                        gpd::ModelError);
    }
    SUBCASE("empty grid") {
        const std::vector<AlphaEpsilon> none;
        CHECK_THROWS_AS((void)gpd::select_alpha_eps(none, [](AlphaEpsilon, std::size_t) { return 0.0; }),
                        gpd::InputError);
    }
}
