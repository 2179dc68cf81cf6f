#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "gpd/data_io.hpp"
#include "oracles.hpp"

namespace fixtures {

[[nodiscard]] std::string data_path(const std::string& file);
[[nodiscard]] gpd::Dataset fig2();
[[nodiscard]] gpd::Dataset sinusoid_500();

[[nodiscard]] oracle::Mat to_mat(const Eigen::MatrixXd& M);
[[nodiscard]] oracle::Vec to_vec(const Eigen::VectorXd& v);
[[nodiscard]] Eigen::MatrixXd to_eigen(const oracle::Mat& M);

struct RandomProblem {
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;      // n x C targets
    Eigen::MatrixXd noise;  // n x C positive variances
    double variance;
    double lengthscale;
};

/// Inputs in [-2, 2]^d, targets N(0, 1), noise in [0.05, 1], a^2 in
/// [0.5, 2], l in [0.5, 2].
[[nodiscard]] RandomProblem random_problem(std::mt19937_64& rng, int n, int d, int C);

/// Relative difference scaled by max(1, |b|).
[[nodiscard]] double rel_diff(double a, double b);

}  // namespace fixtures
