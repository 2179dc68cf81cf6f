#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "gpd/calibrate.hpp"
#include "gpd/dirichlet.hpp"
#include "gpd/gp_exact.hpp"
#include "gpd/gp_sparse.hpp"

namespace gpd {

struct GpdModel {
    PosteriorModel posterior;
    HyperparamFit hyper;
    TransformedTargets targets;
};

/// Transforms the labels, optimizes the shared kernel against the exact LML
/// (or the collapsed bound when `inducing` is given) and fits the posterior.
[[nodiscard]] GpdModel gpd_fit(const Eigen::MatrixXd& X, std::span<const int> labels,
                               int num_classes, AlphaEpsilon alpha_eps,
                               const std::optional<Eigen::MatrixXd>& inducing,
                               const OptimizerConfig& config);

[[nodiscard]] LatentPrediction gpd_latent(const GpdModel& model, const Eigen::MatrixXd& X_star);

[[nodiscard]] ClassProbabilities gpd_predict(const GpdModel& model, const Eigen::MatrixXd& X_star,
                                             int samples, std::uint64_t seed);

/// Starting kernel for the Laplace classifier: unit variance, median-distance
/// lengthscale.
[[nodiscard]] KernelParams laplace_kernel_init(const Eigen::MatrixXd& X);

}  // namespace gpd
