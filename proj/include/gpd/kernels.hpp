#pragma once

#include <Eigen/Dense>

namespace gpd {

/// Isotropic RBF hyperparameters, stored in log space so both stay positive.
struct KernelParams {
    double log_variance = 0.0;     // log a^2
    double log_lengthscale = 0.0;  // log l

    static KernelParams from_natural(double variance, double lengthscale);

    [[nodiscard]] double variance() const;
    [[nodiscard]] double lengthscale() const;
    [[nodiscard]] bool finite() const;
};

/// a^2 exp(-|x - x'|^2 / (2 l^2)).
[[nodiscard]] double rbf(const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& x_prime,
                         const KernelParams& params);

/// Pairwise squared Euclidean distances between the rows of X and X_prime.
[[nodiscard]] Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X,
                                                const Eigen::MatrixXd& X_prime);

/// Cross-covariance between the rows of X and X_prime. Rows are filled in
/// parallel; each entry is computed independently so the result does not
/// depend on the thread schedule.
[[nodiscard]] Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X,
                                            const Eigen::MatrixXd& X_prime,
                                            const KernelParams& params);

/// Single-threaded reference for kernel_matrix.
[[nodiscard]] Eigen::MatrixXd kernel_matrix_serial(const Eigen::MatrixXd& X,
                                                   const Eigen::MatrixXd& X_prime,
                                                   const KernelParams& params);

struct KernelGradients {
    Eigen::MatrixXd d_log_variance;     // equals K
    Eigen::MatrixXd d_log_lengthscale;  // K_ij * |x_i - x_j|^2 / l^2
};

[[nodiscard]] KernelGradients kernel_gradients(const Eigen::MatrixXd& X,
                                               const KernelParams& params);

/// Derivative of K(X, X_prime) with respect to log l.
[[nodiscard]] Eigen::MatrixXd kernel_lengthscale_gradient(const Eigen::MatrixXd& X,
                                                          const Eigen::MatrixXd& X_prime,
                                                          const KernelParams& params);

/// Median pairwise distance between rows (evenly subsampled beyond 1000 rows).
/// Falls back to 1 when every row coincides.
[[nodiscard]] double median_heuristic(const Eigen::MatrixXd& X);

}  // namespace gpd
