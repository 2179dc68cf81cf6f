#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gpd/calibrate.hpp"
#include "gpd/gp_exact.hpp"
#include "gpd/gp_sparse.hpp"
#include "gpd/kernels.hpp"
#include "gpd/linalg.hpp"

namespace gpd {

// ---------------------------------------------------------------------------
// Least-squares regression on one-hot labels

struct GprLabelsModel {
    PosteriorModel posterior;
    HyperparamFit hyper;
};

inline constexpr double kDefaultInitNoiseVariance = 0.1;

/// One homoskedastic regression per one-hot column; kernel and noise variance
/// are shared and optimized jointly. `inducing` selects the sparse variant.
[[nodiscard]] GprLabelsModel gpr_labels_fit(const Eigen::MatrixXd& X, std::span<const int> labels,
                                            int num_classes,
                                            const std::optional<Eigen::MatrixXd>& inducing,
                                            const OptimizerConfig& config);

/// Raw regression outputs as probabilities: clip each class to
/// [1e-12, 1 - 1e-12] and renormalize rows.
[[nodiscard]] Eigen::MatrixXd clipped_probabilities(const Eigen::MatrixXd& latent_means);

/// One-vs-rest Platt calibration of each class score, then row renormalization.
[[nodiscard]] Eigen::MatrixXd platt_probabilities(const Eigen::MatrixXd& latent_means,
                                                  std::span<const PlattParams> platt);

/// Fits one Platt sigmoid per class on held-out latent means.
[[nodiscard]] std::vector<PlattParams> gpr_platt_calibrate(const GprLabelsModel& model,
                                                           const Eigen::MatrixXd& X_cal,
                                                           std::span<const int> labels_cal);

[[nodiscard]] ClassProbabilities gpr_labels_predict(const GprLabelsModel& model,
                                                    const Eigen::MatrixXd& X_star,
                                                    const std::vector<PlattParams>* platt = nullptr);

// ---------------------------------------------------------------------------
// Binary Laplace-approximation GP classifier (logistic link)

struct LaplaceState {
    Eigen::VectorXd mode;    // f_hat
    int newton_iters = 0;
    bool converged = false;
    Eigen::VectorXd W_sqrt;  // sqrt(pi (1 - pi)) at the mode
};

struct LaplaceModel {
    Eigen::MatrixXd train_inputs;
    KernelParams params;
    LaplaceState state;
    Eigen::VectorXd grad_log_lik;  // t - pi at the mode
    Eigen::VectorXd a;             // K^-1 f_hat
    Eigen::LLT<Eigen::MatrixXd> b_chol;  // chol(I + W^1/2 K W^1/2)
    double log_lik = 0.0;                // log p(y | f_hat)
};

/// Damped Newton search for the posterior mode from f = 0 (at most 100
/// iterations, step halving until the penalized objective increases).
/// Labels must be 0/1. Throws ModelError if the gradient norm does not reach
/// 1e-6.
[[nodiscard]] LaplaceModel laplace_gpc_fit(const Eigen::MatrixXd& X, std::span<const int> labels,
                                           const KernelParams& params);

/// Latent predictive marginal (one column: the class-1 logit).
[[nodiscard]] LatentPrediction laplace_latent(const LaplaceModel& model, const Eigen::MatrixXd& X_star);

/// [1 - p, p] with p = E[sigma(f)] under each Gaussian marginal, by 201-point
/// Gauss-Hermite quadrature.
[[nodiscard]] Eigen::MatrixXd logistic_probabilities(const LatentPrediction& latent);

[[nodiscard]] ClassProbabilities laplace_gpc_predict(const LaplaceModel& model,
                                                     const Eigen::MatrixXd& X_star);

/// log p(y|f_hat) - 1/2 f_hat^T K^-1 f_hat - 1/2 log det(I + W^1/2 K W^1/2).
[[nodiscard]] double laplace_marginal_likelihood(const LaplaceModel& model);

/// Approximate evidence and its gradient in (log a^2, log l).
[[nodiscard]] LmlEvaluation laplace_evidence_and_gradient(const Eigen::MatrixXd& X,
                                                          std::span<const int> labels,
                                                          const KernelParams& params);

[[nodiscard]] HyperparamFit optimize_laplace(const Eigen::MatrixXd& X, std::span<const int> labels,
                                             const KernelParams& init, const OptimizerConfig& config);

struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;  // for the weight function exp(-x^2)
};

/// Gauss-Hermite rule via the Golub-Welsch eigenvalue method.
[[nodiscard]] QuadratureRule gauss_hermite(int points);

}  // namespace gpd
