#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gpd/dirichlet.hpp"
#include "gpd/gp_exact.hpp"
#include "gpd/kernels.hpp"
#include "gpd/linalg.hpp"

namespace gpd {

enum class InducingSelection { kmeans, uniform, explicit_points };

struct InducingSet {
    Eigen::MatrixXd Z;
    InducingSelection selection = InducingSelection::explicit_points;
    std::uint64_t seed = 0;
};

/// Lloyd's algorithm from a k-means++ start: at most 50 iterations, stopping
/// once no centroid moves more than 1e-6. Empty clusters are re-seeded at the
/// point farthest from its centroid.
[[nodiscard]] InducingSet kmeans_inducing(const Eigen::MatrixXd& X, int m, std::uint64_t seed);

/// m distinct training rows drawn uniformly without replacement.
[[nodiscard]] InducingSet uniform_inducing(const Eigen::MatrixXd& X, int m, std::uint64_t seed);

[[nodiscard]] InducingSet explicit_inducing(Eigen::MatrixXd Z);

/// Nearest-centroid index for every row of X (ties to the lowest index).
/// Rows are processed in parallel.
[[nodiscard]] std::vector<int> nearest_centroid(const Eigen::MatrixXd& X,
                                                const Eigen::MatrixXd& centroids);
/// Single-threaded reference for nearest_centroid.
[[nodiscard]] std::vector<int> nearest_centroid_serial(const Eigen::MatrixXd& X,
                                                       const Eigen::MatrixXd& centroids);

/// Collapsed variational lower bound summed over classes:
///   log N(y_c | 0, Q + S_c) - 1/2 tr(S_c^-1 (K - Q)),  Q = K_nm K_mm^-1 K_mn.
[[nodiscard]] double sparse_bound(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                  const Eigen::MatrixXd& targets, const NoiseModel& noise,
                                  const KernelParams& params);
[[nodiscard]] double sparse_bound(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                  const TransformedTargets& targets, const KernelParams& params);

/// Bound and its gradient in (log a^2, log l [, log sigma_n^2]).
[[nodiscard]] LmlEvaluation sparse_bound_value_and_gradient(const Eigen::MatrixXd& X,
                                                            const Eigen::MatrixXd& Z,
                                                            const Eigen::MatrixXd& targets,
                                                            const NoiseModel& noise,
                                                            const KernelParams& params);

/// Optimal q(u) for every class, kept in factored form.
struct SparsePosterior {
    Eigen::MatrixXd inducing;
    KernelParams params;
    NoiseModel noise = NoiseModel::homoskedastic(0.0);
    JitteredCholesky kmm;
    /// chol(I + A A^T) per class (a single shared one when homoskedastic).
    std::vector<JitteredCholesky> b_chol;
    Eigen::MatrixXd c;  // m x C, L_B^-1 A S^-1/2 y_c
    int num_classes = 0;

    struct InducingMarginal {
        Eigen::VectorXd mean;
        Eigen::MatrixXd covariance;
    };
    /// Mean and covariance of q(u_c).
    [[nodiscard]] InducingMarginal inducing_posterior(Eigen::Index c) const;
    [[nodiscard]] const JitteredCholesky& b_factor_for(Eigen::Index c) const;
};

[[nodiscard]] SparsePosterior fit_sparse(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                         const Eigen::MatrixXd& targets, const NoiseModel& noise,
                                         const KernelParams& params);
[[nodiscard]] SparsePosterior fit_sparse(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                         const TransformedTargets& targets,
                                         const KernelParams& params);

[[nodiscard]] LatentPrediction predict_latent(const SparsePosterior& model,
                                              const Eigen::MatrixXd& X_star);

/// Maximizes the bound with inducing inputs held fixed.
[[nodiscard]] HyperparamFit optimize_sparse(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                                            const Eigen::MatrixXd& targets,
                                            const NoiseModel& noise_init, const KernelParams& init,
                                            const OptimizerConfig& config);

using PosteriorModel = std::variant<ExactPosterior, SparsePosterior>;

[[nodiscard]] LatentPrediction predict_latent(const PosteriorModel& model,
                                              const Eigen::MatrixXd& X_star);

}  // namespace gpd
