#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace fixtures {

std::string data_path(const std::string& file) { return std::string(GPD_TEST_DATA_DIR) + "/" + file; }

gpd::Dataset fig2() { return gpd::load_csv(data_path("fig2.csv")); }

gpd::Dataset sinusoid_500() { return gpd::load_csv(data_path("synth_sinusoid_500_seed7.csv")); }

oracle::Mat to_mat(const Eigen::MatrixXd& M) {
    oracle::Mat out(M.rows(), oracle::Vec(M.cols()));
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) out[i][j] = M(i, j);
    return out;
}

oracle::Vec to_vec(const Eigen::VectorXd& v) { return oracle::Vec(v.data(), v.data() + v.size()); }

Eigen::MatrixXd to_eigen(const oracle::Mat& M) {
    Eigen::MatrixXd out(M.size(), M.empty() ? 0 : M[0].size());
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = M[i][j];
    return out;
}

RandomProblem random_problem(std::mt19937_64& rng, int n, int d, int C) {
    std::uniform_real_distribution<double> x(-2.0, 2.0), nz(0.05, 1.0), hp(std::log(0.5), std::log(2.0));
    std::normal_distribution<double> g(0.0, 1.0);
    RandomProblem p;
    p.X.resize(n, d);
    p.Y.resize(n, C);
    p.noise.resize(n, C);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) p.X(i, j) = x(rng);
        for (int c = 0; c < C; ++c) {
            p.Y(i, c) = g(rng);
            p.noise(i, c) = nz(rng);
        }
    }
    p.variance = std::exp(hp(rng));
    p.lengthscale = std::exp(hp(rng));
    return p;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace fixtures
