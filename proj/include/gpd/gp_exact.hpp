#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gpd/dirichlet.hpp"
#include "gpd/kernels.hpp"
#include "gpd/linalg.hpp"
#include "gpd/optimize.hpp"

namespace gpd {

/// Observation noise. Heteroskedastic variances are fixed per entry (n x C,
/// one column per latent process); the homoskedastic variance is shared by
/// every point and class and is optimized alongside the kernel.
class NoiseModel {
public:
    struct Heteroskedastic {
        Eigen::MatrixXd variances;
    };
    struct Homoskedastic {
        double log_noise_variance;
    };

    static NoiseModel heteroskedastic(Eigen::MatrixXd variances);
    static NoiseModel homoskedastic(double log_noise_variance);

    [[nodiscard]] bool is_homoskedastic() const;
    [[nodiscard]] double noise_variance() const;  // homoskedastic only
    [[nodiscard]] double log_noise_variance() const;  // homoskedastic only
    [[nodiscard]] const Eigen::MatrixXd& variances() const;  // heteroskedastic only
    /// Noise variances for latent process c over n points.
    [[nodiscard]] Eigen::VectorXd column(Eigen::Index c, Eigen::Index n) const;

    /// Throws InputError when variances are non-positive or shaped wrongly.
    void validate(Eigen::Index n, Eigen::Index num_classes) const;

private:
    explicit NoiseModel(std::variant<Heteroskedastic, Homoskedastic> kind) : kind_(std::move(kind)) {}
    std::variant<Heteroskedastic, Homoskedastic> kind_;
};

/// Latent marginal moments at query points, one column per class.
struct LatentPrediction {
    Eigen::MatrixXd means;
    Eigen::MatrixXd variances;
};

/// Exact GP posterior for C independent latent processes sharing one kernel.
struct ExactPosterior {
    Eigen::MatrixXd train_inputs;
    KernelParams params;
    NoiseModel noise = NoiseModel::homoskedastic(0.0);
    /// One factorization per class, or a single shared one when homoskedastic.
    std::vector<JitteredCholesky> chol;
    Eigen::MatrixXd alpha_solve;  // n x C, (K + Sigma_c)^-1 y_c
    int num_classes = 0;

    [[nodiscard]] const JitteredCholesky& factor_for(Eigen::Index c) const;
};

[[nodiscard]] ExactPosterior fit_exact(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                                       const NoiseModel& noise, const KernelParams& params);
[[nodiscard]] ExactPosterior fit_exact(const Eigen::MatrixXd& X, const TransformedTargets& targets,
                                       const KernelParams& params);

[[nodiscard]] LatentPrediction predict_latent(const ExactPosterior& model,
                                              const Eigen::MatrixXd& X_star);

/// Sum over classes of log N(y_c | 0, K + Sigma_c).
[[nodiscard]] double log_marginal_likelihood(const Eigen::MatrixXd& X,
                                             const Eigen::MatrixXd& targets,
                                             const NoiseModel& noise, const KernelParams& params);

/// d LML / d(log a^2, log l [, log sigma_n^2]).
[[nodiscard]] Eigen::VectorXd lml_gradient(const Eigen::MatrixXd& X, const Eigen::MatrixXd& targets,
                                           const NoiseModel& noise, const KernelParams& params);

struct LmlEvaluation {
    double value;
    Eigen::VectorXd gradient;
};
[[nodiscard]] LmlEvaluation lml_value_and_gradient(const Eigen::MatrixXd& X,
                                                   const Eigen::MatrixXd& targets,
                                                   const NoiseModel& noise,
                                                   const KernelParams& params);

struct OptimizerConfig {
    int restarts = 3;
    int max_iterations = 200;
    double gradient_tolerance = 1e-5;
    std::uint64_t seed = 0;
    /// Lower bound on the lengthscale as a multiple of the median pairwise
    /// distance (the bottom of the restart range); 0 leaves it unbounded.
    /// Without it, fits to very noisy labels can collapse to white noise.
    double min_lengthscale_factor = 0.1;
};

struct HyperparamFit {
    KernelParams kernel;
    NoiseModel noise = NoiseModel::homoskedastic(0.0);
    double objective = 0.0;  // LML or bound at the returned point
    int iterations = 0;      // of the winning restart
    int evaluations = 0;     // across all restarts
    int restarts_succeeded = 0;
};

/// Draws `restarts - 1` additional log-uniform starting points around `init`
/// (variance in [0.1, 10], lengthscale in [0.1, 10] times the median distance,
/// noise variance in [1e-3, 1]).
[[nodiscard]] std::vector<Eigen::VectorXd> restart_points(const Eigen::VectorXd& init,
                                                          double median_distance,
                                                          const OptimizerConfig& config);

/// Minimizes `objective` over theta = (log a^2, log l, ...) from every start,
/// keeping log l above `log_floor` (-inf for none) through
/// log l = log_floor + softplus(u). Returned points are in theta space.
[[nodiscard]] RestartResult minimize_kernel_objective(const ObjectiveFn& objective,
                                                      const std::vector<Eigen::VectorXd>& starts,
                                                      double log_floor,
                                                      const OptimizerConfig& config);

/// log(factor * median distance), or -inf when the factor is 0.
[[nodiscard]] double lengthscale_log_floor(const Eigen::MatrixXd& X, const OptimizerConfig& config);

[[nodiscard]] HyperparamFit optimize_hyperparams(const Eigen::MatrixXd& X,
                                                 const Eigen::MatrixXd& targets,
                                                 const NoiseModel& noise_init,
                                                 const KernelParams& init,
                                                 const OptimizerConfig& config);

/// Starting point used by the pipelines: variance from the mean squared target
/// (the prior mean is zero) and lengthscale from the median heuristic.
[[nodiscard]] KernelParams default_kernel_init(const Eigen::MatrixXd& X,
                                               const Eigen::MatrixXd& targets);

}  // namespace gpd
