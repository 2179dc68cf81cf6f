#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include "fixtures.hpp"
#include "gpd/data_io.hpp"
#include "gpd/errors.hpp"

namespace {

std::string error_of(const std::string& text) {
    try {
        (void)gpd::parse_csv(text);
    } catch (const gpd::InputError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("parse_csv examples") {
    const auto d = gpd::parse_csv("0,0\n1,1\n");
    CHECK(d.X.rows() == 2);
    CHECK(d.X.cols() == 1);
    CHECK(d.X(0, 0) == 0.0);
    CHECK(d.X(1, 0) == 1.0);
    CHECK(d.y == std::vector<int>{0, 1});
    CHECK(d.num_classes == 2);

    const auto s = gpd::parse_csv("1.5,a\n2.5,b\n3.5,a\n");
    CHECK(s.y == std::vector<int>{0, 1, 0});
    CHECK(s.class_names == std::vector<std::string>{"a", "b"});

    const auto e = error_of("0,0\n1,2,3\n");
    CHECK(e.find("row 2") != std::string::npos);
}

TEST_CASE("integer labels map in numeric order") {
    const auto d = gpd::parse_csv("0.1,5\n0.2,-1\n0.3,2\n0.4,5\n");
    CHECK(d.y == std::vector<int>{2, 0, 1, 2});
    CHECK(d.class_names == std::vector<std::string>{"-1", "2", "5"});
}

TEST_CASE("headers, named labels and whitespace") {
    const auto d = gpd::parse_csv("\xEF\xBB\xBFlabel, f1 ,f2\nyes, 1.0, 2\nno,3,4\n", gpd::LabelColumn::named("label"));
    CHECK(d.X.rows() == 2);
    CHECK(d.X(0, 1) == 2.0);
    CHECK(d.X(1, 0) == 3.0);
    CHECK(d.feature_names == std::vector<std::string>{"f1", "f2"});
    CHECK(d.y == std::vector<int>{0, 1});
    CHECK_THROWS_AS((void)gpd::parse_csv("1,2\n3,4\n", gpd::LabelColumn::named("y")), gpd::InputError);
    CHECK_THROWS_AS((void)gpd::parse_csv("a,y\n3,4\n", gpd::LabelColumn::named("z")), gpd::InputError);
}

TEST_CASE("malformed input is rejected with the row") {
    CHECK(error_of("1,0\nNA,1\n").find("row 2") != std::string::npos);
    CHECK(error_of("1,0\n,1\n").find("missing") != std::string::npos);
    CHECK(error_of("1,0\n?,1\n").find("row 2") != std::string::npos);
    CHECK(error_of("x,y\n1,0\n2x,1\n").find("row 3") != std::string::npos);
    CHECK(error_of("1,0\n2,\n").find("missing label") != std::string::npos);
    CHECK(!error_of("").empty());
    CHECK(!error_of("a,b\n").empty());
    CHECK(!error_of("1\n2\n").empty());
    CHECK_THROWS_AS((void)gpd::load_csv("/nonexistent/file.csv"), gpd::InputError);
}

TEST_CASE("save and load round trip") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1e3);
    gpd::Dataset d;
    d.X.resize(40, 3);
    d.y.resize(40);
    d.num_classes = 3;
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 3; ++j) d.X(i, j) = g(rng) * std::pow(10.0, j - 5);
        d.y[i] = i % 3;
    }
    d.X(0, 0) = 0.1;
    d.X(1, 1) = -1e-300;
    const auto path = (std::filesystem::temp_directory_path() / "gpd_roundtrip.csv").string();
    gpd::save_csv(d, path);
    const auto back = gpd::load_csv(path);
    std::remove(path.c_str());
    CHECK(back.X == d.X);
    CHECK(back.y == d.y);
    CHECK(back.num_classes == 3);
    CHECK(gpd::format_csv(back) == gpd::format_csv(gpd::parse_csv(gpd::format_csv(back))));
}

TEST_CASE("dataset validation and subsets") {
    gpd::Dataset d;
    d.X = Eigen::MatrixXd::Zero(3, 1);
    d.y = {0, 1, 2};
    d.num_classes = 2;
    CHECK_THROWS_AS(d.validate(), gpd::InputError);
    d.num_classes = 3;
    CHECK_NOTHROW(d.validate());
    d.y.pop_back();
    CHECK_THROWS_AS(d.validate(), gpd::InputError);
    d.y = {0, 1, 2};
    d.X(1, 0) = std::nan("");
    CHECK_THROWS_AS(d.validate(), gpd::InputError);
    d.X(1, 0) = 4.0;
    const auto s = d.subset({2, 1});
    CHECK(s.y == std::vector<int>{2, 1});
    CHECK(s.X(1, 0) == 4.0);
    CHECK(s.num_classes == 3);
}

TEST_CASE("standardize examples") {
    gpd::Dataset train;
    train.X.resize(2, 2);
    train.X << 0.0, 5.0, 2.0, 5.0;
    train.y = {0, 1};
    train.num_classes = 2;
    gpd::Dataset test = train.subset({0});
    test.X << 4.0, 7.0;
    const auto st = gpd::standardize(train, {test});
    CHECK(st.scaler.mean(0) == 1.0);
    CHECK(st.scaler.sd(0) == 1.0);
    CHECK(st.scaler.sd(1) == 1.0);
    CHECK(st.train.X(0, 0) == -1.0);
    CHECK(st.train.X(1, 0) == 1.0);
    CHECK(st.train.X(0, 1) == 0.0);
    CHECK(st.train.X(1, 1) == 0.0);
    CHECK(st.others[0].X(0, 0) == 3.0);
    CHECK(st.others[0].X(0, 1) == 2.0);
    CHECK_THROWS_AS((void)gpd::fit_standardizer(Eigen::MatrixXd(0, 2)), gpd::InputError);
}

TEST_CASE("standardized training features have zero mean and unit sd") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(57, 4);
    X.col(2) = X.col(2) * 1e4 + Eigen::VectorXd::Constant(57, 3e5);
    const auto Z = gpd::fit_standardizer(X).apply(X);
    for (int j = 0; j < 4; ++j) {
        const double mean = Z.col(j).mean();
        const double sd = std::sqrt((Z.col(j).array() - mean).square().mean());
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(sd - 1.0) < 1e-9);
    }
}

TEST_CASE("split properties") {
    gpd::Dataset d;
    d.X.resize(10, 1);
    d.y.resize(10);
    d.num_classes = 2;
    for (int i = 0; i < 10; ++i) {
        d.X(i, 0) = i;
        d.y[i] = i % 2;
    }
    const auto s = gpd::split(d, {0.5, 0.0, 3, 0});
    CHECK(s.train.size() == 5);
    CHECK(s.test.size() == 5);
    CHECK(s.calibration.size() == 0);
    const long ones = std::count(s.test.y.begin(), s.test.y.end(), 1);
    CHECK((ones == 2 || ones == 3));

    const auto again = gpd::split(d, {0.5, 0.0, 3, 0});
    CHECK(again.train_rows == s.train_rows);
    CHECK(again.test_rows == s.test_rows);
    const auto other = gpd::split(d, {0.5, 0.0, 3, 1});
    const auto other_seed = gpd::split(d, {0.5, 0.0, 4, 0});
    CHECK((other.test_rows != s.test_rows || other_seed.test_rows != s.test_rows));
}

TEST_CASE("split with calibration part") {
    const auto data = fixtures::sinusoid_500();
    const auto s = gpd::split(data, {0.2, 0.2, 11, 2});
    CHECK(s.test.size() == 100);
    CHECK(s.calibration.size() == 80);
    CHECK(s.train.size() == 320);
    std::set<Eigen::Index> all;
    for (const auto* rows : {&s.train_rows, &s.calibration_rows, &s.test_rows}) {
        for (auto r : *rows) CHECK(all.insert(r).second);
    }
    CHECK(all.size() == 500);
    // Stratification: each part's class-1 share matches the data within rounding.
    const double share = std::count(data.y.begin(), data.y.end(), 1) / 500.0;
    for (const auto* part : {&s.train, &s.calibration, &s.test}) {
        const double n = static_cast<double>(part->size());
        const double k = static_cast<double>(std::count(part->y.begin(), part->y.end(), 1));
        CHECK(std::abs(k - share * n) <= 1.0);
    }
}

TEST_CASE("split errors") {
    gpd::Dataset d;
    d.X = Eigen::MatrixXd::Zero(3, 1);
    d.y = {0, 0, 1};
    d.num_classes = 2;
    CHECK_THROWS_AS((void)gpd::split(d, {0.9, 0.0, 0, 0}), gpd::InputError);
    CHECK_THROWS_AS((void)gpd::split(d, {0.0, 0.0, 0, 0}), gpd::InputError);
    CHECK_THROWS_AS((void)gpd::split(d, {1.0, 0.0, 0, 0}), gpd::InputError);
    CHECK_THROWS_AS((void)gpd::split(d, {0.3, 1.0, 0, 0}), gpd::InputError);
}

TEST_CASE("synthetic Bernoulli data") {
    const auto ones = gpd::synth_bernoulli_1d(200, gpd::ProbabilityFunction::constant(1.0), 1);
    CHECK(std::all_of(ones.data.y.begin(), ones.data.y.end(), [](int y) { return y == 1; }));

    const auto half = gpd::synth_bernoulli_1d(100000, gpd::ProbabilityFunction::constant(0.5), 2);
    const double mean = std::count(half.data.y.begin(), half.data.y.end(), 1) / 100000.0;
    CHECK(std::abs(mean - 0.5) < 0.01);

    const auto a = gpd::synth_bernoulli_1d(300, gpd::ProbabilityFunction::sinusoid(), 7);
    const auto b = gpd::synth_bernoulli_1d(300, gpd::ProbabilityFunction::sinusoid(), 7);
    CHECK(a.data.X == b.data.X);
    CHECK(a.data.y == b.data.y);
    CHECK(a.data.num_classes == 2);
    CHECK((a.data.X.array() >= -3.0).all());
    CHECK((a.data.X.array() <= 3.0).all());
    for (int i = 0; i < 300; ++i) {
        CHECK(a.true_prob(i) == doctest::Approx(0.5 + 0.4 * std::sin(1.5 * a.data.X(i, 0))));
    }
    const auto step = gpd::ProbabilityFunction::by_name("step");
    CHECK(step.fn(-1.0) == 0.05);
    CHECK(step.fn(1.0) == 0.95);
    CHECK_THROWS_AS((void)gpd::ProbabilityFunction::by_name("cubic"), gpd::InputError);
    CHECK_THROWS_AS((void)gpd::ProbabilityFunction::constant(1.5), gpd::InputError);
}

TEST_CASE("fixture files load") {
    const auto f = fixtures::fig2();
    CHECK(f.size() == 50);
    CHECK(f.num_classes == 2);
    const auto s = fixtures::sinusoid_500();
    CHECK(s.size() == 500);
}

TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 10; ++s)
        for (std::uint64_t k = 0; k < 10; ++k) seen.insert(gpd::derive_seed(s, k));
    CHECK(seen.size() == 100);
    CHECK(gpd::derive_seed(3, 4) == gpd::derive_seed(3, 4));
}
